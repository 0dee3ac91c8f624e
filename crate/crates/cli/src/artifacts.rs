//! The one place that writes output files. Every file carries the config
//! fingerprint: field files in their trailer, text files in a header line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use heavyflow::field::{write_field_tagged, AnyField};

pub struct Artifacts {
    dir: PathBuf,
    fingerprint: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path, fingerprint: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Artifacts { dir: dir.to_path_buf(), fingerprint: fingerprint.to_string(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn tag(&self) -> String {
        format!("heavyflow config {}", self.fingerprint)
    }

    pub fn field(&mut self, name: &str, field: AnyField) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        write_field_tagged(&mut w, &field, &self.tag())?;
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `body`, which must already mention the fingerprint.
    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        debug_assert!(body.contains(&self.fingerprint), "{name} lacks the fingerprint");
        let path = self.dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
