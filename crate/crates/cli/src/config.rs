//! Run configuration: a sectioned TOML file plus one command-line override
//! per key.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use heavyflow::diagnostics::{text_fingerprint, verify::DEFAULT_SEED, StudyKind};
use heavyflow::field::{read_field, AnyField, GridSpec, VectorField, WallMode};
use heavyflow::forcing::{preset_force, ForcePreset};
use heavyflow::iteration::{LoopOptions, Solver, Tolerances};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Default study sweep: `m = 10^2, 10^2.5, ..., 10^4`.
pub fn default_masses() -> Vec<f64> {
    (0..5).map(|k| 10f64.powf(2.0 + 0.5 * k as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    FloatList,
    Str,
    Bool,
}

/// Every configurable key as `(section, key, kind)`. The override flag of a
/// key is its name in kebab case.
pub const KEYS: &[(&str, &str, Kind)] = &[
    ("grid", "n", Kind::Int),
    ("grid", "nx", Kind::Int),
    ("grid", "ny", Kind::Int),
    ("grid", "lx", Kind::Float),
    ("grid", "ly", Kind::Float),
    ("model", "m", Kind::Float),
    ("model", "masses", Kind::FloatList),
    ("model", "gamma", Kind::Float),
    ("model", "friction", Kind::Float),
    ("model", "p", Kind::Float),
    ("force", "preset", Kind::Str),
    ("force", "amplitude", Kind::Float),
    ("force", "force_file", Kind::Str),
    ("loop", "tol_inner", Kind::Float),
    ("loop", "tol_density", Kind::Float),
    ("loop", "tol_outer", Kind::Float),
    ("loop", "tol_residual", Kind::Float),
    ("loop", "max_inner", Kind::Int),
    ("loop", "max_density", Kind::Int),
    ("loop", "max_outer", Kind::Int),
    ("loop", "theta", Kind::Float),
    ("loop", "solver", Kind::Str),
    ("loop", "init", Kind::Str),
    ("loop", "checkpoints", Kind::Bool),
    ("bounds", "mode", Kind::Str),
    ("bounds", "c_f", Kind::Float),
    ("bounds", "energy", Kind::Float),
    ("bounds", "alpha", Kind::Float),
    ("bounds", "margin", Kind::Float),
    ("study", "kind", Kind::Str),
    ("run", "strict", Kind::Bool),
    ("run", "seed", Kind::Int),
    ("run", "threads", Kind::Int),
    ("output", "dir", Kind::Str),
];

pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: None, nx: None, ny: None, lx: 1.0, ly: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    pub gamma: f64,
    pub friction: f64,
    pub p: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { m: None, masses: None, gamma: 2.0, friction: 1.0, p: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForceSection {
    pub preset: String,
    pub amplitude: f64,
    /// Face-vector field file; replaces the preset and fixes the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_file: Option<PathBuf>,
}

impl Default for ForceSection {
    fn default() -> Self {
        ForceSection { preset: "vortex".into(), amplitude: 1.0, force_file: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Monolithic,
    Decomposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    Zero,
    /// Start from the incompressible flow driven by the same force.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopSection {
    pub tol_inner: f64,
    pub tol_density: f64,
    pub tol_outer: f64,
    pub tol_residual: f64,
    pub max_inner: usize,
    pub max_density: usize,
    pub max_outer: usize,
    pub theta: f64,
    pub solver: SolverChoice,
    pub init: InitChoice,
    /// Write fields and a sidecar per outer iterate (solve only).
    pub checkpoints: bool,
}

impl Default for LoopSection {
    fn default() -> Self {
        let t = Tolerances::default();
        let o = LoopOptions::default();
        LoopSection {
            tol_inner: t.inner,
            tol_density: t.density,
            tol_outer: t.outer,
            tol_residual: t.residual,
            max_inner: o.max_inner,
            max_density: o.max_density,
            max_outer: o.max_outer,
            theta: o.theta,
            solver: SolverChoice::Monolithic,
            init: InitChoice::Zero,
            checkpoints: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMode {
    /// Measure the certificates on an unbounded pre-run and scale by `margin`.
    Calibrate,
    /// Use `c_f` and `energy` as given.
    Fixed,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub mode: BoundsMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    pub alpha: f64,
    pub margin: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection { mode: BoundsMode::Calibrate, c_f: None, energy: None, alpha: 0.1, margin: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindChoice {
    Divergence,
    Contraction,
    LowMach,
    Full,
}

impl From<KindChoice> for StudyKind {
    fn from(k: KindChoice) -> Self {
        match k {
            KindChoice::Divergence => StudyKind::Divergence,
            KindChoice::Contraction => StudyKind::Contraction,
            KindChoice::LowMach => StudyKind::LowMach,
            KindChoice::Full => StudyKind::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub kind: KindChoice,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection { kind: KindChoice::Full }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub strict: bool,
    /// Seed of the randomized self-tests.
    pub seed: u64,
    /// Worker cap; takes precedence over `HEAVYFLOW_THREADS`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { strict: false, seed: DEFAULT_SEED, threads: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("heavyflow-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub force: ForceSection,
    #[serde(rename = "loop")]
    pub loops: LoopSection,
    pub bounds: BoundsSection,
    pub study: StudySection,
    pub run: RunSection,
    pub output: OutputSection,
}

/// Converts an override string to a TOML value of the key's kind.
fn parse_value(key: &str, kind: Kind, raw: &str) -> Result<Value> {
    let bad = || format!("--{} expects {}, got '{raw}'", flag_name(key), kind_name(kind));
    Ok(match kind {
        Kind::Int => Value::Integer(raw.trim().parse().with_context(bad)?),
        Kind::Float => Value::Float(raw.trim().parse().with_context(bad)?),
        Kind::Bool => Value::Boolean(raw.trim().parse().with_context(bad)?),
        Kind::Str => Value::String(raw.to_string()),
        Kind::FloatList => {
            let inner = raw.trim().trim_start_matches('[').trim_end_matches(']');
            let items: Result<Vec<Value>> = inner
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| Ok(Value::Float(s.trim().parse().with_context(bad)?)))
                .collect();
            Value::Array(items?)
        }
    })
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Int => "an integer",
        Kind::Float => "a number",
        Kind::FloatList => "a comma-separated list of numbers",
        Kind::Str => "a string",
        Kind::Bool => "true or false",
    }
}

/// TOML writes `1000` as an integer; numeric keys accept it.
fn coerce(table: &mut Table) {
    for (section, key, kind) in KEYS {
        let Some(Value::Table(sec)) = table.get_mut(*section) else { continue };
        let Some(v) = sec.get_mut(*key) else { continue };
        match (kind, &mut *v) {
            (Kind::Float, Value::Integer(i)) => *v = Value::Float(*i as f64),
            (Kind::FloatList, Value::Array(items)) => {
                for it in items.iter_mut() {
                    if let Value::Integer(i) = it {
                        *it = Value::Float(*i as f64);
                    }
                }
            }
            _ => {}
        }
    }
}

impl RunConfig {
    /// Reads `path` (if any) and applies `overrides` as `(key, raw value)`.
    pub fn load(path: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self> {
        let mut table: Table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("cannot parse config {}", p.display()))?
            }
            None => Table::new(),
        };
        coerce(&mut table);
        for (key, raw) in overrides {
            let Some(&(section, _, kind)) = KEYS.iter().find(|(_, k, _)| k == key) else {
                bail!("unknown configuration key '{key}'");
            };
            let v = parse_value(key, kind, raw)?;
            let sec = table.entry(section).or_insert_with(|| Value::Table(Table::new()));
            let Value::Table(sec) = sec else { bail!("[{section}] must be a table") };
            sec.insert(key.to_string(), v);
        }
        let cfg: RunConfig = Value::Table(table).try_into().context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(m.gamma > 1.0 && m.gamma.is_finite()) {
            bail!("gamma = {} is not allowed: the pressure law rho^gamma requires gamma > 1", m.gamma);
        }
        if !(m.p > 3.0 && m.p < 6.0) {
            bail!("p = {} is not allowed: the a priori norms require p in the open interval (3, 6)", m.p);
        }
        for &mass in m.m.iter().chain(m.masses.iter().flatten()) {
            if !(mass > 0.0 && mass.is_finite()) {
                bail!("m = {mass} is not allowed: the mean density requires m > 0");
            }
        }
        if !(m.friction >= 0.0 && m.friction.is_finite()) {
            bail!("friction = {} must be finite and >= 0", m.friction);
        }
        if !(self.force.amplitude >= 0.0 && self.force.amplitude.is_finite()) {
            bail!("amplitude = {} must be finite and >= 0", self.force.amplitude);
        }
        let l = &self.loops;
        for (name, t) in [
            ("tol_inner", l.tol_inner),
            ("tol_density", l.tol_density),
            ("tol_outer", l.tol_outer),
            ("tol_residual", l.tol_residual),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                bail!("{name} = {t} must be positive");
            }
        }
        if !(l.theta > 0.0 && l.theta <= 1.0) {
            bail!("theta = {} must lie in (0, 1]", l.theta);
        }
        if l.max_inner == 0 || l.max_density == 0 || l.max_outer == 0 {
            bail!("iteration caps must be at least 1");
        }
        let b = &self.bounds;
        if b.mode == BoundsMode::Fixed {
            match (b.c_f, b.energy) {
                (Some(c), Some(e)) if c > 0.0 && e > 0.0 => {}
                _ => bail!("bounds mode 'fixed' needs positive c_f and energy"),
            }
        }
        if !(b.margin >= 1.0) {
            bail!("margin = {} must be >= 1", b.margin);
        }
        if !(b.alpha > 0.0 && b.alpha < 1.0) {
            bail!("alpha = {} must lie in (0, 1)", b.alpha);
        }
        if self.run.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        self.force.preset.parse::<ForcePreset>()?;
        self.grid_spec()?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = &self.grid;
        let nx = g.nx.or(g.n).unwrap_or(64);
        let ny = g.ny.or(g.n).unwrap_or(nx);
        Ok(GridSpec::new(nx, ny, g.lx, g.ly, WallMode::AllSlipWalls)?)
    }

    /// The force field, from the file or the preset normalized in `L^p`.
    pub fn force_field(&self) -> Result<VectorField> {
        if let Some(path) = &self.force.force_file {
            let mut f = std::fs::File::open(path).with_context(|| format!("cannot open force file {}", path.display()))?;
            let field = read_field(&mut std::io::BufReader::new(&mut f))
                .with_context(|| format!("cannot read force file {}", path.display()))?;
            let AnyField::Vector(v) = field else {
                bail!("force file {} does not hold a face-vector field", path.display());
            };
            let g = &self.grid;
            if g.n.is_some() || g.nx.is_some() || g.ny.is_some() {
                let want = self.grid_spec()?;
                if (want.nx, want.ny) != (v.grid.nx, v.grid.ny) {
                    bail!(
                        "force file grid {}x{} disagrees with the configured {}x{}",
                        v.grid.nx,
                        v.grid.ny,
                        want.nx,
                        want.ny
                    );
                }
            }
            return Ok(v.with_walls_zeroed());
        }
        let preset: ForcePreset = self.force.preset.parse()?;
        Ok(preset_force(self.grid_spec()?, preset, self.force.amplitude, self.model.p)?)
    }

    pub fn single_mass(&self) -> Result<f64> {
        match (&self.model.m, &self.model.masses) {
            (Some(m), _) => Ok(*m),
            (None, Some(list)) if list.len() == 1 => Ok(list[0]),
            (None, Some(_)) => bail!("solve takes one mass: set m"),
            (None, None) => Ok(1e3),
        }
    }

    /// `masses`, else `[m]`, else the default sweep.
    pub fn mass_list(&self) -> Vec<f64> {
        match (&self.model.masses, &self.model.m) {
            (Some(list), _) => list.clone(),
            (None, Some(m)) => vec![*m],
            (None, None) => default_masses(),
        }
    }

    pub fn loop_options(&self) -> LoopOptions {
        let l = &self.loops;
        LoopOptions {
            tol: Tolerances { inner: l.tol_inner, density: l.tol_density, outer: l.tol_outer, residual: l.tol_residual },
            max_inner: l.max_inner,
            max_density: l.max_density,
            max_outer: l.max_outer,
            theta: l.theta,
            solver: match l.solver {
                SolverChoice::Monolithic => Solver::Monolithic,
                SolverChoice::Decomposed => Solver::Decomposed,
            },
            strict: self.run.strict,
            ..LoopOptions::default()
        }
    }

    /// Canonical text of the settings that affect results; the output
    /// directory and the worker count are left out.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        c.run.threads = None;
        toml::to_string(&c).expect("config serializes")
    }

    pub fn fingerprint(&self) -> String {
        text_fingerprint(&self.canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, overrides: &[(&str, &str)]) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        let ov: Vec<(&str, String)> = overrides.iter().map(|(k, v)| (*k, v.to_string())).collect();
        RunConfig::load(Some(&path), &ov)
    }

    #[test]
    fn every_key_round_trips_through_serde() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        for (section, key, _) in KEYS {
            assert_eq!(KEYS.iter().filter(|(_, k, _)| k == key).count(), 1, "{section}.{key} is not unique");
        }
    }

    #[test]
    fn integers_accepted_for_numbers() {
        let c = load("[model]\nm = 1000\nmasses = [100, 1e3, 10000]\ngamma = 2\n", &[]).unwrap();
        assert_eq!(c.model.m, Some(1000.0));
        assert_eq!(c.mass_list(), vec![100.0, 1000.0, 10000.0]);
    }

    #[test]
    fn overrides_win_over_the_file() {
        let c = load(
            "[model]\ngamma = 3.0\n[loop]\nsolver = \"monolithic\"\n",
            &[("gamma", "1.5"), ("solver", "decomposed"), ("masses", "1e2, 1e3,1e4"), ("strict", "true")],
        )
        .unwrap();
        assert_eq!(c.model.gamma, 1.5);
        assert_eq!(c.loops.solver, SolverChoice::Decomposed);
        assert_eq!(c.mass_list().len(), 3);
        assert!(c.run.strict);
    }

    #[test]
    fn constraints_are_enforced_with_reasons() {
        let e = load("[model]\ngamma = 0.5\n", &[]).unwrap_err();
        assert!(format!("{e:#}").contains("gamma > 1"), "{e:#}");
        let e = load("", &[("p", "6")]).unwrap_err();
        assert!(format!("{e:#}").contains("(3, 6)"), "{e:#}");
        let e = load("", &[("m", "-1")]).unwrap_err();
        assert!(format!("{e:#}").contains("m > 0"), "{e:#}");
        assert!(load("[model]\ngama = 2.0\n", &[]).is_err());
        assert!(load("", &[("bogus", "1")]).is_err());
        assert!(load("", &[("mode", "fixed")]).is_err());
        assert!(load("", &[("preset", "tornado")]).is_err());
    }

    #[test]
    fn fingerprint_ignores_destination() {
        let a = load("", &[("dir", "a"), ("threads", "1")]).unwrap();
        let b = load("", &[("dir", "b")]).unwrap();
        let c = load("", &[("gamma", "2.5")]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
