//! Binary field dumps and CSV export.
//!
//! Binary layout (little-endian): magic `HVF1`, `nx: u64`, `ny: u64`,
//! `lx: f64`, `ly: f64`, `kind: u64`, then the row-major `f64` payload.
//! Vector fields store `xcomp` followed by `ycomp`. The kind tag is 1 for
//! cell scalars, 2 for face vectors, 3 for node scalars, plus `0x100` when
//! the grid is periodic in x. An optional trailer `TAG1`, `len: u64` and
//! `len` bytes of UTF-8 text may follow the payload; readers that do not
//! look for it ignore it.

use std::io::{Read, Write};

use super::{GridSpec, NodeField, ScalarField, VectorField, WallMode};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HVF1";
const PERIODIC_BIT: u64 = 0x100;
const TAG_MAGIC: &[u8; 4] = b"TAG1";

#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
    Node(NodeField),
}

impl AnyField {
    pub fn grid(&self) -> GridSpec {
        match self {
            AnyField::Scalar(s) => s.grid,
            AnyField::Vector(v) => v.grid,
            AnyField::Node(n) => n.grid,
        }
    }

    fn kind(&self) -> u64 {
        let base = match self {
            AnyField::Scalar(_) => 1,
            AnyField::Vector(_) => 2,
            AnyField::Node(_) => 3,
        };
        if self.grid().periodic() {
            base | PERIODIC_BIT
        } else {
            base
        }
    }
}

impl From<ScalarField> for AnyField {
    fn from(s: ScalarField) -> Self {
        AnyField::Scalar(s)
    }
}
impl From<VectorField> for AnyField {
    fn from(v: VectorField) -> Self {
        AnyField::Vector(v)
    }
}
impl From<NodeField> for AnyField {
    fn from(n: NodeField) -> Self {
        AnyField::Node(n)
    }
}

pub fn write_field<W: Write>(w: &mut W, field: &AnyField) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.nx as u64).to_le_bytes())?;
    w.write_all(&(g.ny as u64).to_le_bytes())?;
    w.write_all(&g.lx.to_le_bytes())?;
    w.write_all(&g.ly.to_le_bytes())?;
    w.write_all(&field.kind().to_le_bytes())?;
    let mut put = |v: &[f64]| -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 8);
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    };
    match field {
        AnyField::Scalar(s) => put(&s.values)?,
        AnyField::Vector(v) => {
            put(&v.xcomp)?;
            put(&v.ycomp)?;
        }
        AnyField::Node(n) => put(&n.values)?,
    }
    Ok(())
}

/// [`write_field`] followed by a text trailer.
pub fn write_field_tagged<W: Write>(w: &mut W, field: &AnyField, tag: &str) -> Result<()> {
    write_field(w, field)?;
    w.write_all(TAG_MAGIC)?;
    w.write_all(&(tag.len() as u64).to_le_bytes())?;
    w.write_all(tag.as_bytes())?;
    Ok(())
}

/// Reads a field and its trailer text, if any.
pub fn read_field_tagged<R: Read>(r: &mut R) -> Result<(AnyField, Option<String>)> {
    let field = read_field(r)?;
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) if &magic == TAG_MAGIC => {}
        Ok(()) => return Err(Error::Format("unexpected bytes after payload".into())),
        Err(_) => return Ok((field, None)),
    }
    let len = read_u64(r)? as usize;
    let mut text = vec![0u8; len];
    r.read_exact(&mut text).map_err(|_| Error::Format("truncated trailer".into()))?;
    let text = String::from_utf8(text).map_err(|_| Error::Format("trailer is not UTF-8".into()))?;
    Ok((field, Some(text)))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("payload shorter than the header promises".into()))?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn read_field<R: Read>(r: &mut R) -> Result<AnyField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let nx = read_u64(r)? as usize;
    let ny = read_u64(r)? as usize;
    let lx = f64::from_bits(read_u64(r)?);
    let ly = f64::from_bits(read_u64(r)?);
    let kind = read_u64(r)?;
    let mode = if kind & PERIODIC_BIT != 0 { WallMode::PeriodicX } else { WallMode::AllSlipWalls };
    let g = GridSpec::new(nx, ny, lx, ly, mode)?;
    match kind & !PERIODIC_BIT {
        1 => Ok(AnyField::Scalar(ScalarField::from_values(g, read_f64s(r, g.n_cells())?)?)),
        2 => {
            let xc = read_f64s(r, g.n_xfaces())?;
            let yc = read_f64s(r, g.n_yfaces())?;
            Ok(AnyField::Vector(VectorField::from_components(g, xc, yc)?))
        }
        3 => Ok(AnyField::Node(NodeField::from_values(g, read_f64s(r, g.n_nodes())?)?)),
        k => Err(Error::Format(format!("unknown kind tag {k:#x}"))),
    }
}

/// One row per cell (per node for node fields). Vector fields are averaged
/// to cell centers.
pub fn write_csv<W: Write>(w: &mut W, field: &AnyField) -> Result<()> {
    let g = field.grid();
    match field {
        AnyField::Scalar(s) => {
            writeln!(w, "x,y,value")?;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let (x, y) = g.cell_center(i, j);
                    writeln!(w, "{x},{y},{}", s.at(i, j))?;
                }
            }
        }
        AnyField::Vector(v) => {
            let (ax, ay) = v.cell_average();
            writeln!(w, "x,y,vx,vy")?;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let (x, y) = g.cell_center(i, j);
                    writeln!(w, "{x},{y},{},{}", ax.at(i, j), ay.at(i, j))?;
                }
            }
        }
        AnyField::Node(n) => {
            writeln!(w, "x,y,value")?;
            for j in 0..=g.ny {
                for i in 0..=g.nx {
                    let (x, y) = g.node_pos(i, j);
                    writeln!(w, "{x},{y},{}", n.at(i, j))?;
                }
            }
        }
    }
    Ok(())
}
