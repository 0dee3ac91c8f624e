//! Staggered (MAC) grid fields on a rectangle and the discrete operators on them.
//!
//! Storage layout, row-major with `j` (the y index) outermost:
//!
//! | entity | index        | count             |
//! |--------|--------------|-------------------|
//! | cell   | `j*nx + i`   | `nx * ny`         |
//! | x-face | `j*(nx+1)+i` | `(nx+1) * ny`     |
//! | y-face | `j*nx + i`   | `nx * (ny+1)`     |
//! | node   | `j*(nx+1)+i` | `(nx+1) * (ny+1)` |
//!
//! In periodic-x mode the x-face and node columns `i = nx` duplicate column 0.

mod io;
mod norms;
mod ops;
pub mod random;

pub use io::{read_field, read_field_tagged, write_csv, write_field, write_field_tagged, AnyField};
pub use norms::{
    grad_seminorm, hessian_seminorm, inner, lp_norm, sobolev_norm, Component, Exponent,
    Lattice, Quadrature,
};
pub use ops::{
    cell_to_xfaces, cell_to_yfaces, curl2d, curl_of_stream, divergence, gradient,
    mean_zero_project, node_vorticity, sym_grad,
};
pub(crate) use ops::{dvx_dy_node, dvy_dx_node};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WallMode {
    /// Slip walls on all four sides.
    AllSlipWalls,
    /// Periodic in x, slip walls at y = 0 and y = Ly.
    PeriodicX,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub wall_mode: WallMode,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, wall_mode: WallMode) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::InvalidGrid(format!("need nx, ny >= 8, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!("edge lengths must be positive, got {lx}x{ly}")));
        }
        Ok(GridSpec { nx, ny, lx, ly, wall_mode })
    }

    /// Square box with slip walls.
    pub fn unit_square(n: usize) -> Self {
        GridSpec::new(n, n, 1.0, 1.0, WallMode::AllSlipWalls).expect("n >= 8")
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }
    pub fn periodic(&self) -> bool {
        self.wall_mode == WallMode::PeriodicX
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn n_xfaces(&self) -> usize {
        (self.nx + 1) * self.ny
    }
    pub fn n_yfaces(&self) -> usize {
        self.nx * (self.ny + 1)
    }
    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn xf(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    #[inline]
    pub fn yf(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }
    pub fn xface_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), (j as f64 + 0.5) * self.hy())
    }
    pub fn yface_pos(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), j as f64 * self.hy())
    }
    pub fn node_pos(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    /// Quadrature weight of x-face column `i` (half at the two end columns).
    pub fn xface_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx {
            0.5
        } else {
            1.0
        }
    }
    pub fn yface_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny {
            0.5
        } else {
            1.0
        }
    }
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        self.xface_weight(i) * self.yface_weight(j)
    }

    /// Diameter of the rectangle.
    pub fn diameter(&self) -> f64 {
        self.lx.hypot(self.ly)
    }
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(v: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in v {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Cell-centered scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

/// Face-centered vector: `xcomp` on x-faces, `ycomp` on y-faces.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: GridSpec,
    pub xcomp: Vec<f64>,
    pub ycomp: Vec<f64>,
}

/// Node-centered scalar (vorticity, streamfunction).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

/// Cell-centered symmetric 2x2 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub grid: GridSpec,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub xy: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField { grid, values: vec![0.0; grid.n_cells()] }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField { grid, values: vec![c; grid.n_cells()] }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch);
        }
        check_finite(&values, "scalar field")?;
        Ok(ScalarField { grid, values })
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        ScalarField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.cell(i, j)]
    }

    pub fn integral(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.area()
    }

    /// L1 mass `sum |s| * area`, the scale used in mean-zero tolerances.
    pub fn abs_integral(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        ScalarField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    /// `self + a * x`
    pub fn axpy(&self, a: f64, x: &Self) -> Self {
        self.zip(x, |s, xv| s + a * xv)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        VectorField { grid, xcomp: vec![0.0; grid.n_xfaces()], ycomp: vec![0.0; grid.n_yfaces()] }
    }

    pub fn from_components(grid: GridSpec, xcomp: Vec<f64>, ycomp: Vec<f64>) -> Result<Self> {
        if xcomp.len() != grid.n_xfaces() || ycomp.len() != grid.n_yfaces() {
            return Err(Error::GridMismatch);
        }
        check_finite(&xcomp, "vector field")?;
        check_finite(&ycomp, "vector field")?;
        if grid.periodic() {
            for j in 0..grid.ny {
                if xcomp[grid.xf(0, j)] != xcomp[grid.xf(grid.nx, j)] {
                    return Err(Error::Invariant(
                        "periodic x-face column nx must duplicate column 0".into(),
                    ));
                }
            }
        }
        Ok(VectorField { grid, xcomp, ycomp })
    }

    /// Samples `(fx, fy)` at face centers. The periodic duplicate column is
    /// copied from column 0.
    pub fn from_fn(
        grid: GridSpec,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut v = VectorField::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                let (x, y) = grid.xface_pos(i, j);
                v.xcomp[grid.xf(i, j)] = fx(x, y);
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.yface_pos(i, j);
                v.ycomp[grid.yf(i, j)] = fy(x, y);
            }
        }
        v.sync_periodic();
        v
    }

    pub(crate) fn sync_periodic(&mut self) {
        if self.grid.periodic() {
            let g = self.grid;
            for j in 0..g.ny {
                self.xcomp[g.xf(g.nx, j)] = self.xcomp[g.xf(0, j)];
            }
        }
    }

    #[inline]
    pub fn x_at(&self, i: usize, j: usize) -> f64 {
        self.xcomp[self.grid.xf(i, j)]
    }
    #[inline]
    pub fn y_at(&self, i: usize, j: usize) -> f64 {
        self.ycomp[self.grid.yf(i, j)]
    }

    /// Sets the wall-normal components to zero.
    pub fn with_walls_zeroed(mut self) -> Self {
        let g = self.grid;
        if !g.periodic() {
            for j in 0..g.ny {
                self.xcomp[g.xf(0, j)] = 0.0;
                self.xcomp[g.xf(g.nx, j)] = 0.0;
            }
        }
        for i in 0..g.nx {
            self.ycomp[g.yf(i, 0)] = 0.0;
            self.ycomp[g.yf(i, g.ny)] = 0.0;
        }
        self
    }

    /// Largest wall-normal component magnitude.
    pub fn max_wall_normal(&self) -> f64 {
        let g = self.grid;
        let mut m = 0.0f64;
        if !g.periodic() {
            for j in 0..g.ny {
                m = m.max(self.x_at(0, j).abs()).max(self.x_at(g.nx, j).abs());
            }
        }
        for i in 0..g.nx {
            m = m.max(self.y_at(i, 0).abs()).max(self.y_at(i, g.ny).abs());
        }
        m
    }

    pub fn is_wall_compatible(&self) -> bool {
        self.max_wall_normal() == 0.0
    }

    pub fn max_abs(&self) -> f64 {
        self.xcomp.iter().chain(&self.ycomp).fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        VectorField {
            grid: self.grid,
            xcomp: self.xcomp.iter().map(|&v| f(v)).collect(),
            ycomp: self.ycomp.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        VectorField {
            grid: self.grid,
            xcomp: self.xcomp.iter().zip(&other.xcomp).map(|(&a, &b)| f(a, b)).collect(),
            ycomp: self.ycomp.iter().zip(&other.ycomp).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn axpy(&self, a: f64, x: &Self) -> Self {
        self.zip(x, |s, xv| s + a * xv)
    }

    pub fn is_finite(&self) -> bool {
        self.xcomp.iter().chain(&self.ycomp).all(|v| v.is_finite())
    }

    /// Cell-averaged components, used for export.
    pub fn cell_average(&self) -> (ScalarField, ScalarField) {
        let g = self.grid;
        let mut ax = ScalarField::zeros(g);
        let mut ay = ScalarField::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.cell(i, j);
                ax.values[c] = 0.5 * (self.x_at(i, j) + self.x_at(i + 1, j));
                ay.values[c] = 0.5 * (self.y_at(i, j) + self.y_at(i, j + 1));
            }
        }
        (ax, ay)
    }
}

impl NodeField {
    pub fn zeros(grid: GridSpec) -> Self {
        NodeField { grid, values: vec![0.0; grid.n_nodes()] }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch);
        }
        check_finite(&values, "node field")?;
        Ok(NodeField { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                let (x, y) = grid.node_pos(i, j);
                values.push(f(x, y));
            }
        }
        let mut n = NodeField { grid, values };
        if grid.periodic() {
            for j in 0..=grid.ny {
                n.values[grid.node(grid.nx, j)] = n.values[grid.node(0, j)];
            }
        }
        n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.node(i, j)]
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        j == 0 || j == self.grid.ny || (!self.grid.periodic() && (i == 0 || i == self.grid.nx))
    }

    pub fn scaled(&self, c: f64) -> Self {
        NodeField { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        NodeField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    /// Average of the four corner nodes of each cell.
    pub fn to_cells(&self) -> ScalarField {
        let g = self.grid;
        ScalarField::from_values(
            g,
            (0..g.ny)
                .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
                .map(|(i, j)| {
                    0.25 * (self.at(i, j) + self.at(i + 1, j) + self.at(i, j + 1) + self.at(i + 1, j + 1))
                })
                .collect(),
        )
        .expect("finite in, finite out")
    }
}

impl SymTensorField {
    pub fn trace(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.xx.iter().zip(&self.yy).map(|(a, b)| a + b).collect(),
        }
    }

    /// Pointwise Frobenius contraction `D:D`.
    pub fn contract_self(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: (0..self.xx.len())
                .map(|k| self.xx[k].powi(2) + self.yy[k].powi(2) + 2.0 * self.xy[k].powi(2))
                .collect(),
        }
    }
}
