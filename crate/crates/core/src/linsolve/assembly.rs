//! Stencils of the scaled linear system and its sparse LU.
//!
//! Unknowns: scaled pressure `q` on cells and `u` on interior faces. Rows,
//! after dividing the momentum equation by `m`:
//!
//! ```text
//! continuity:  div u + kappa div(avg(q) uf) = 0
//! momentum:    V u + C(w) u + grad q = rhs
//! ```
//!
//! `V` is `-div(2 D(u))` with wall shear `friction * u_t - h/m`, `C(w)` the
//! skew-symmetric convection by the mass flux `w`. The same emitter feeds the
//! sparse matrix and the matrix-free residual, so the two never disagree.
//!
//! The continuity rows sum to zero, so the system has a one-dimensional null
//! space. The factorized matrix replaces the first continuity row by the pin
//! `q_0 = value`; `sum q = 0` is then restored by subtracting the multiple of
//! the null vector (the pinned solve with `q_0 = 1` and zero data). A
//! Lagrange multiplier would do the same but adds a dense row and column that
//! ruin the fill of the factorization.

use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};

use super::WallTraction;
use crate::error::{Error, Result};
use crate::field::{GridSpec, VectorField};
use crate::helmholtz::poisson::{init_faer, Cache};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub grid: GridSpec,
    nc: usize,
    nxi: usize,
    pub n: usize,
}

impl Layout {
    pub fn new(grid: GridSpec) -> Self {
        let nc = grid.n_cells();
        let nxi = (grid.nx - 1) * grid.ny;
        let nyi = grid.nx * (grid.ny - 1);
        Layout { grid, nc, nxi, n: nc + nxi + nyi }
    }

    #[inline]
    pub fn q(&self, i: usize, j: usize) -> usize {
        self.grid.cell(i, j)
    }

    /// Unknown index of x-face `(i, j)`, `None` on walls.
    #[inline]
    pub fn ux(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || i == self.grid.nx {
            None
        } else {
            Some(self.nc + j * (self.grid.nx - 1) + (i - 1))
        }
    }

    #[inline]
    pub fn uy(&self, i: usize, j: usize) -> Option<usize> {
        if j == 0 || j == self.grid.ny {
            None
        } else {
            Some(self.nc + self.nxi + (j - 1) * self.grid.nx + i)
        }
    }

    pub fn pack(&self, q: &[f64], u: &VectorField) -> Vec<f64> {
        let g = self.grid;
        let mut x = vec![0.0; self.n];
        x[..self.nc].copy_from_slice(q);
        for j in 0..g.ny {
            for i in 1..g.nx {
                x[self.ux(i, j).unwrap()] = u.x_at(i, j);
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                x[self.uy(i, j).unwrap()] = u.y_at(i, j);
            }
        }
        x
    }

    pub fn unpack(&self, x: &[f64]) -> (Vec<f64>, VectorField) {
        let g = self.grid;
        let q = x[..self.nc].to_vec();
        let mut u = VectorField::zeros(g);
        for j in 0..g.ny {
            for i in 1..g.nx {
                u.xcomp[g.xf(i, j)] = x[self.ux(i, j).unwrap()];
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                u.ycomp[g.yf(i, j)] = x[self.uy(i, j).unwrap()];
            }
        }
        (q, u)
    }
}

/// Coefficients of one scaled system.
pub(crate) struct Coeffs<'a> {
    /// Wall friction divided by the viscosity scale.
    pub friction: f64,
    /// Convecting mass flux on faces (wall-compatible).
    pub w: &'a VectorField,
    /// Transport coefficient in the continuity row.
    pub kappa: f64,
    /// Transport velocity (wall-compatible).
    pub transport: &'a VectorField,
}

pub(crate) trait Sink {
    fn add(&mut self, row: usize, col: usize, val: f64);
}

struct PatternSink(Vec<Pair<usize, usize>>);
impl Sink for PatternSink {
    fn add(&mut self, row: usize, col: usize, _: f64) {
        self.0.push(Pair::new(row, col));
    }
}

struct ValueSink(Vec<f64>);
impl Sink for ValueSink {
    fn add(&mut self, _: usize, _: usize, val: f64) {
        self.0.push(val);
    }
}

pub(crate) struct ApplySink<'a> {
    pub x: &'a [f64],
    pub y: Vec<f64>,
}
impl Sink for ApplySink<'_> {
    fn add(&mut self, row: usize, col: usize, val: f64) {
        self.y[row] += val * self.x[col];
    }
}

/// Adds `coef * u(face)` unless the face is a wall face.
#[inline]
fn put<S: Sink>(s: &mut S, row: usize, col: Option<usize>, coef: f64) {
    if let Some(c) = col {
        s.add(row, c, coef);
    }
}

/// Emits every matrix entry in a value-independent order.
/// With `pinned`, the first continuity row becomes `q_0`.
pub(crate) fn emit<S: Sink>(lay: &Layout, c: &Coeffs, pinned: bool, s: &mut S) {
    emit_continuity(lay, c, pinned, s);
    emit_viscous(lay, c.friction, s);
    emit_convection(lay, c.w, s);
    emit_pressure(lay, s);
}

fn emit_continuity<S: Sink>(lay: &Layout, c: &Coeffs, pinned: bool, s: &mut S) {
    let g = lay.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let uf = c.transport;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let row = lay.q(i, j);
            if pinned && row == 0 {
                s.add(0, 0, 1.0);
                continue;
            }
            put(s, row, lay.ux(i + 1, j), 1.0 / hx);
            put(s, row, lay.ux(i, j), -1.0 / hx);
            put(s, row, lay.uy(i, j + 1), 1.0 / hy);
            put(s, row, lay.uy(i, j), -1.0 / hy);
            if i + 1 < g.nx {
                let a = 0.5 * c.kappa * uf.x_at(i + 1, j) / hx;
                s.add(row, lay.q(i, j), a);
                s.add(row, lay.q(i + 1, j), a);
            }
            if i > 0 {
                let a = -0.5 * c.kappa * uf.x_at(i, j) / hx;
                s.add(row, lay.q(i - 1, j), a);
                s.add(row, lay.q(i, j), a);
            }
            if j + 1 < g.ny {
                let a = 0.5 * c.kappa * uf.y_at(i, j + 1) / hy;
                s.add(row, lay.q(i, j), a);
                s.add(row, lay.q(i, j + 1), a);
            }
            if j > 0 {
                let a = -0.5 * c.kappa * uf.y_at(i, j) / hy;
                s.add(row, lay.q(i, j - 1), a);
                s.add(row, lay.q(i, j), a);
            }
        }
    }
}

/// `-div(2 D(u))` with wall shear `friction * u_t` (sign per wall).
fn emit_viscous<S: Sink>(lay: &Layout, friction: f64, s: &mut S) {
    let g = lay.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let (nx, ny) = (g.nx, g.ny);
    let (ixx, iyy, ixy) = (1.0 / (hx * hx), 1.0 / (hy * hy), 1.0 / (hx * hy));
    for j in 0..ny {
        for i in 1..nx {
            let row = lay.ux(i, j).unwrap();
            let me = Some(row);
            put(s, row, lay.ux(i + 1, j), -2.0 * ixx);
            put(s, row, me, 4.0 * ixx);
            put(s, row, lay.ux(i - 1, j), -2.0 * ixx);
            // tau_xy(i, j+1) = (ux(i,j+1) - ux(i,j))/hy + (uy(i,j+1) - uy(i-1,j+1))/hx
            if j + 1 < ny {
                put(s, row, lay.ux(i, j + 1), -iyy);
                put(s, row, me, iyy);
                put(s, row, lay.uy(i, j + 1), -ixy);
                put(s, row, lay.uy(i - 1, j + 1), ixy);
            } else {
                put(s, row, me, friction / hy);
            }
            if j > 0 {
                put(s, row, me, iyy);
                put(s, row, lay.ux(i, j - 1), -iyy);
                put(s, row, lay.uy(i, j), ixy);
                put(s, row, lay.uy(i - 1, j), -ixy);
            } else {
                put(s, row, me, friction / hy);
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let row = lay.uy(i, j).unwrap();
            let me = Some(row);
            put(s, row, lay.uy(i, j + 1), -2.0 * iyy);
            put(s, row, me, 4.0 * iyy);
            put(s, row, lay.uy(i, j - 1), -2.0 * iyy);
            // tau_xy(i+1, j) = (ux(i+1,j) - ux(i+1,j-1))/hy + (uy(i+1,j) - uy(i,j))/hx
            if i + 1 < nx {
                put(s, row, lay.ux(i + 1, j), -ixy);
                put(s, row, lay.ux(i + 1, j - 1), ixy);
                put(s, row, lay.uy(i + 1, j), -ixx);
                put(s, row, me, ixx);
            } else {
                put(s, row, me, friction / hx);
            }
            if i > 0 {
                put(s, row, lay.ux(i, j), ixy);
                put(s, row, lay.ux(i, j - 1), -ixy);
                put(s, row, me, ixx);
                put(s, row, lay.uy(i - 1, j), -ixx);
            } else {
                put(s, row, me, friction / hx);
            }
        }
    }
}

/// Central convection by the face flux `w`. Each pair of neighbours shares
/// one interpolated flux with opposite signs, so the block is exactly
/// skew-symmetric.
fn emit_convection<S: Sink>(lay: &Layout, w: &VectorField, s: &mut S) {
    let g = lay.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let (nx, ny) = (g.nx, g.ny);
    for j in 0..ny {
        for i in 1..nx {
            let row = lay.ux(i, j).unwrap();
            let fe = 0.25 * (w.x_at(i, j) + w.x_at(i + 1, j)) / hx;
            let fw = 0.25 * (w.x_at(i - 1, j) + w.x_at(i, j)) / hx;
            put(s, row, lay.ux(i + 1, j), fe);
            put(s, row, lay.ux(i - 1, j), -fw);
            if j + 1 < ny {
                let f = 0.25 * (w.y_at(i - 1, j + 1) + w.y_at(i, j + 1)) / hy;
                put(s, row, lay.ux(i, j + 1), f);
            }
            if j > 0 {
                let f = 0.25 * (w.y_at(i - 1, j) + w.y_at(i, j)) / hy;
                put(s, row, lay.ux(i, j - 1), -f);
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let row = lay.uy(i, j).unwrap();
            if i + 1 < nx {
                let f = 0.25 * (w.x_at(i + 1, j - 1) + w.x_at(i + 1, j)) / hx;
                put(s, row, lay.uy(i + 1, j), f);
            }
            if i > 0 {
                let f = 0.25 * (w.x_at(i, j - 1) + w.x_at(i, j)) / hx;
                put(s, row, lay.uy(i - 1, j), -f);
            }
            let fnn = 0.25 * (w.y_at(i, j) + w.y_at(i, j + 1)) / hy;
            let fs = 0.25 * (w.y_at(i, j - 1) + w.y_at(i, j)) / hy;
            put(s, row, lay.uy(i, j + 1), fnn);
            put(s, row, lay.uy(i, j - 1), -fs);
        }
    }
}

fn emit_pressure<S: Sink>(lay: &Layout, s: &mut S) {
    let g = lay.grid;
    for j in 0..g.ny {
        for i in 1..g.nx {
            let row = lay.ux(i, j).unwrap();
            s.add(row, lay.q(i, j), 1.0 / g.hx());
            s.add(row, lay.q(i - 1, j), -1.0 / g.hx());
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let row = lay.uy(i, j).unwrap();
            s.add(row, lay.q(i, j), 1.0 / g.hy());
            s.add(row, lay.q(i, j - 1), -1.0 / g.hy());
        }
    }
}

/// Scaled right-hand side: `G/m` on interior faces plus the wall-traction
/// terms `h / (m h)` next to each wall.
pub(crate) fn rhs(lay: &Layout, g_over_m: &VectorField, h: &WallTraction, inv_m: f64) -> Vec<f64> {
    let g = lay.grid;
    let mut b = vec![0.0; lay.n];
    for j in 0..g.ny {
        for i in 1..g.nx {
            let mut v = g_over_m.x_at(i, j);
            if j == 0 {
                v += inv_m * h.bottom[i] / g.hy();
            }
            if j + 1 == g.ny {
                v += inv_m * h.top[i] / g.hy();
            }
            b[lay.ux(i, j).unwrap()] = v;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let mut v = g_over_m.y_at(i, j);
            if i == 0 {
                v += inv_m * h.left[j] / g.hx();
            }
            if i + 1 == g.nx {
                v += inv_m * h.right[j] / g.hx();
            }
            b[lay.uy(i, j).unwrap()] = v;
        }
    }
    b
}

pub(crate) fn apply(lay: &Layout, c: &Coeffs, x: &[f64]) -> Vec<f64> {
    let mut s = ApplySink { x, y: vec![0.0; lay.n] };
    emit(lay, c, false, &mut s);
    s.y
}

/// `|A| |x|`, the natural scale for relative residuals.
pub(crate) fn apply_abs(lay: &Layout, c: &Coeffs, x: &[f64]) -> Vec<f64> {
    struct Abs<'a>(&'a [f64], Vec<f64>);
    impl Sink for Abs<'_> {
        fn add(&mut self, row: usize, col: usize, val: f64) {
            self.1[row] += (val * self.0[col]).abs();
        }
    }
    let mut s = Abs(x, vec![0.0; lay.n]);
    emit(lay, c, false, &mut s);
    s.1
}

/// Convective term `C(w) u` on faces (zero on wall faces).
pub(crate) fn convect(w: &VectorField, u: &VectorField) -> VectorField {
    let lay = Layout::new(u.grid);
    let x = lay.pack(&vec![0.0; u.grid.n_cells()], u);
    let mut s = ApplySink { x: &x, y: vec![0.0; lay.n] };
    emit_convection(&lay, w, &mut s);
    lay.unpack(&s.y).1
}

struct Pattern {
    layout: Layout,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: SymbolicLu<usize>,
}

static PATTERNS: Cache<Pattern> = Cache::new();

fn pattern(grid: GridSpec) -> Result<Arc<Pattern>> {
    PATTERNS.get_or_build(grid, |g| {
        init_faer();
        let layout = Layout::new(g);
        let zero = VectorField::zeros(g);
        let coeffs = Coeffs { friction: 0.0, w: &zero, kappa: 0.0, transport: &zero };
        let mut ps = PatternSink(Vec::new());
        emit(&layout, &coeffs, true, &mut ps);
        let fail = |e: String| Error::Solver { reason: e, residual: f64::NAN };
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(layout.n, layout.n, &ps.0)
            .map_err(|e| fail(format!("{e:?}")))?;
        let lu = SymbolicLu::try_new(symbolic.as_ref()).map_err(|e| fail(format!("{e:?}")))?;
        Ok(Pattern { layout, symbolic, argsort, lu })
    })
}

/// Factorizes the system for the given coefficients and solves `A x = b`
/// with `sum q = 0`, one step of iterative refinement on each solve.
/// The first continuity equation of `b` must be redundant (it is dropped).
pub(crate) fn solve(grid: GridSpec, c: &Coeffs, b: &[f64]) -> Result<Vec<f64>> {
    let pat = pattern(grid)?;
    let lay = &pat.layout;
    let mut vs = ValueSink(Vec::new());
    emit(lay, c, true, &mut vs);
    let fail = |e: String| Error::Solver { reason: e, residual: f64::NAN };
    let mat = SparseColMat::new_from_argsort(pat.symbolic.clone(), &pat.argsort, &vs.0)
        .map_err(|e| fail(format!("{e:?}")))?;
    let lu = Lu::try_new_with_symbolic(pat.lu.clone(), mat.as_ref())
        .map_err(|e| fail(format!("singular or ill-conditioned system: {e:?}")))?;
    let refined = |rhs: &Col<f64>| {
        let mut x = lu.solve(rhs);
        let ax = &mat * &x;
        let r = rhs - &ax;
        let dx = lu.solve(&r);
        x += &dx;
        x
    };
    let bp = Col::<f64>::from_fn(b.len(), |i| if i == 0 { 0.0 } else { b[i] });
    let xp = refined(&bp);
    let xz = refined(&Col::<f64>::from_fn(b.len(), |i| if i == 0 { 1.0 } else { 0.0 }));
    let nc = grid.n_cells();
    let sp = crate::field::compensated_sum((0..nc).map(|i| xp[i]));
    let sz = crate::field::compensated_sum((0..nc).map(|i| xz[i]));
    if !(sz.abs() > 0.0) || !sz.is_finite() {
        return Err(fail("null vector has zero mean; transport term too strong".into()));
    }
    let t = sp / sz;
    let out: Vec<f64> = (0..b.len()).map(|i| xp[i] - t * xz[i]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver { reason: "non-finite solution".into(), residual: f64::NAN });
    }
    Ok(out)
}
