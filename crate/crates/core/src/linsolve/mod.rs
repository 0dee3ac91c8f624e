//! Linearized steady problem with frozen coefficients:
//!
//! ```text
//! m div u + div(r uf) = 0
//! -div(2m D(u)) + gamma m^(gamma-1) grad r + (m + rt) ub . grad u = G
//! u . n = 0,   n . 2m D(u) . t + f u . t = h,   int r = 0
//! ```
//!
//! [`solve_monolithic`] factorizes the whole saddle-point system;
//! [`solve_decomposed`] splits it into vorticity, effective flux, transport
//! and potential subproblems.

mod assembly;
mod decomposed;
pub mod manufactured;

pub use decomposed::{
    effective_flux, potential_solve, solve_decomposed, solve_decomposed_with, transport_solve,
    vorticity_solve, DecomposedOptions, DecompositionTrace, TransportReport,
};

use crate::error::{Error, Result};
use crate::field::{
    cell_to_xfaces, cell_to_yfaces, divergence, dvx_dy_node, dvy_dx_node, lp_norm, sobolev_norm,
    Exponent, GridSpec, ScalarField, VectorField,
};
use crate::model::ModelParams;
use assembly::{Coeffs, Layout};

/// Values on the interior nodes of each wall, indexed along the wall
/// (`bottom`/`top` by `i` in `0..=nx`, `left`/`right` by `j` in `0..=ny`).
/// Corner entries are never read.
///
/// Used both for the tangential data `h` of the wall law and for wall-node
/// shear stresses `rho tau_xy`.
#[derive(Debug, Clone, PartialEq)]
pub struct WallTraction {
    pub bottom: Vec<f64>,
    pub top: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl WallTraction {
    pub fn zeros(g: GridSpec) -> Self {
        WallTraction {
            bottom: vec![0.0; g.nx + 1],
            top: vec![0.0; g.nx + 1],
            left: vec![0.0; g.ny + 1],
            right: vec![0.0; g.ny + 1],
        }
    }

    fn walls(&self) -> [&Vec<f64>; 4] {
        [&self.bottom, &self.top, &self.left, &self.right]
    }

    pub fn max_abs(&self) -> f64 {
        self.walls().iter().flat_map(|w| w.iter()).fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.walls().iter().flat_map(|w| w.iter()).all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| c * x).collect();
        WallTraction { bottom: s(&self.bottom), top: s(&self.top), left: s(&self.left), right: s(&self.right) }
    }

    fn check(&self, g: &GridSpec) -> Result<()> {
        if self.bottom.len() != g.nx + 1
            || self.top.len() != g.nx + 1
            || self.left.len() != g.ny + 1
            || self.right.len() != g.ny + 1
        {
            return Err(Error::GridMismatch);
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("wall data"));
        }
        Ok(())
    }

    /// Tangential data `h = -n . S . t` for the wall-node stress `S_xy` held in
    /// `self`, with `t = (1, 0)` on bottom/top and `(0, 1)` on left/right.
    pub fn stress_to_traction(&self) -> Self {
        WallTraction {
            bottom: self.bottom.clone(),
            top: self.top.iter().map(|v| -v).collect(),
            left: self.left.clone(),
            right: self.right.iter().map(|v| -v).collect(),
        }
    }

    /// Wall-law integral `sum h u.t |face|`.
    pub fn work(&self, u: &VectorField) -> f64 {
        let g = u.grid;
        let mut acc = 0.0;
        for i in 1..g.nx {
            acc += g.hx() * (self.bottom[i] * u.x_at(i, 0) + self.top[i] * u.x_at(i, g.ny - 1));
        }
        for j in 1..g.ny {
            acc += g.hy() * (self.left[j] * u.y_at(0, j) + self.right[j] * u.y_at(g.nx - 1, j));
        }
        acc
    }
}

/// Wall-node shear `rho tau_xy(u)` with one-sided normal differences and
/// `rho` averaged from the two adjacent cells.
pub fn wall_shear(rho: &ScalarField, u: &VectorField) -> WallTraction {
    let g = u.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut t = WallTraction::zeros(g);
    let tau = |i: usize, j: usize| dvx_dy_node(u, i, j) + dvy_dx_node(u, i, j);
    for i in 1..nx {
        let rb = 0.5 * (rho.at(i - 1, 0) + rho.at(i, 0));
        let rt = 0.5 * (rho.at(i - 1, ny - 1) + rho.at(i, ny - 1));
        t.bottom[i] = rb * tau(i, 0);
        t.top[i] = rt * tau(i, ny);
    }
    for j in 1..ny {
        let rl = 0.5 * (rho.at(0, j - 1) + rho.at(0, j));
        let rr = 0.5 * (rho.at(nx - 1, j - 1) + rho.at(nx - 1, j));
        t.left[j] = rl * tau(0, j);
        t.right[j] = rr * tau(nx, j);
    }
    t
}

/// Wall-node stress imposed by the friction law `n . S . t + f u . t = 0`.
pub fn friction_stress(u: &VectorField, friction: f64) -> WallTraction {
    let g = u.grid;
    let mut t = WallTraction::zeros(g);
    for i in 1..g.nx {
        t.bottom[i] = friction * u.x_at(i, 0);
        t.top[i] = -friction * u.x_at(i, g.ny - 1);
    }
    for j in 1..g.ny {
        t.left[j] = friction * u.y_at(0, j);
        t.right[j] = -friction * u.y_at(g.nx - 1, j);
    }
    t
}

/// `-div(2 rho D(u))` on interior faces (zero on wall faces). Interior nodes
/// use `rho` averaged over the four surrounding cells; wall nodes take the
/// shear stress from `wall`.
pub fn viscous_operator(rho: &ScalarField, u: &VectorField, wall: &WallTraction) -> VectorField {
    let g = u.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (hx, hy) = (g.hx(), g.hy());
    let node_stress = |i: usize, j: usize| -> f64 {
        if j == 0 {
            wall.bottom[i]
        } else if j == ny {
            wall.top[i]
        } else if i == 0 {
            wall.left[j]
        } else if i == nx {
            wall.right[j]
        } else {
            let r = 0.25 * (rho.at(i - 1, j - 1) + rho.at(i, j - 1) + rho.at(i - 1, j) + rho.at(i, j));
            r * ((u.x_at(i, j) - u.x_at(i, j - 1)) / hy + (u.y_at(i, j) - u.y_at(i - 1, j)) / hx)
        }
    };
    let txx = |i: usize, j: usize| 2.0 * rho.at(i, j) * (u.x_at(i + 1, j) - u.x_at(i, j)) / hx;
    let tyy = |i: usize, j: usize| 2.0 * rho.at(i, j) * (u.y_at(i, j + 1) - u.y_at(i, j)) / hy;
    let mut out = VectorField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            out.xcomp[g.xf(i, j)] = -((txx(i, j) - txx(i - 1, j)) / hx
                + (node_stress(i, j + 1) - node_stress(i, j)) / hy);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            out.ycomp[g.yf(i, j)] = -((node_stress(i + 1, j) - node_stress(i, j)) / hx
                + (tyy(i, j) - tyy(i, j - 1)) / hy);
        }
    }
    out
}

/// Convective term `w . grad u` in skew-symmetric central form.
pub fn convection(w: &VectorField, u: &VectorField) -> VectorField {
    assembly::convect(w, u)
}

/// Face values of `rho * v`, with `rho` averaged from the adjacent cells.
pub fn face_product(rho: &ScalarField, v: &VectorField) -> VectorField {
    let rx = cell_to_xfaces(rho);
    let ry = cell_to_yfaces(rho);
    VectorField {
        grid: v.grid,
        xcomp: v.xcomp.iter().zip(&rx).map(|(a, b)| a * b).collect(),
        ycomp: v.ycomp.iter().zip(&ry).map(|(a, b)| a * b).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedProblem {
    pub params: ModelParams,
    /// Velocity in the continuity term `div(r uf)`.
    pub transport_velocity: VectorField,
    /// Velocity in the convective term.
    pub convective_velocity: VectorField,
    /// `rt`, so the frozen density is `m + rt`.
    pub density_offset: ScalarField,
    pub rhs_g: VectorField,
    pub rhs_h: WallTraction,
}

impl LinearizedProblem {
    /// Problem with zero coefficients and the given data.
    pub fn stokes(params: ModelParams, rhs_g: VectorField, rhs_h: WallTraction) -> Self {
        let g = params.grid();
        LinearizedProblem {
            params,
            transport_velocity: VectorField::zeros(g),
            convective_velocity: VectorField::zeros(g),
            density_offset: ScalarField::zeros(g),
            rhs_g,
            rhs_h,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.params.grid()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let g = self.grid();
        if g.periodic() {
            return Err(Error::InvalidGrid("linear solves need slip walls on all sides".into()));
        }
        for v in [&self.transport_velocity, &self.convective_velocity, &self.rhs_g] {
            if v.grid != g {
                return Err(Error::GridMismatch);
            }
        }
        if self.density_offset.grid != g {
            return Err(Error::GridMismatch);
        }
        self.rhs_h.check(&g)?;
        if !(self.transport_velocity.is_finite()
            && self.convective_velocity.is_finite()
            && self.density_offset.is_finite()
            && self.rhs_g.is_finite())
        {
            return Err(Error::NonFinite("linear problem coefficients"));
        }
        if !self.transport_velocity.is_wall_compatible() || !self.convective_velocity.is_wall_compatible() {
            return Err(Error::Invariant("coefficient velocities must vanish normal to the walls".into()));
        }
        let rmax = self.density_offset.max_abs();
        if self.params.m <= 2.0 * rmax {
            return Err(Error::Invariant(format!(
                "density offset too large: m = {} but 2 max|r| = {}",
                self.params.m,
                2.0 * rmax
            )));
        }
        Ok(())
    }

    /// `||uf||_{2,p} / (gamma m^(gamma-1))`; the transport subproblem is a
    /// contraction when this is small.
    pub fn transport_smallness(&self) -> f64 {
        let p = &self.params;
        sobolev_norm(&self.transport_velocity, 2, p.p()).expect("order 2") * p.kappa()
    }

    /// Convecting flux `(1 + rt/m) ub` on faces.
    pub fn mass_flux(&self) -> VectorField {
        let m = self.params.m;
        let rho = self.density_offset.map(|r| 1.0 + r / m);
        face_product(&rho, &self.convective_velocity)
    }

    fn coeffs<'a>(&'a self, w: &'a VectorField) -> Coeffs<'a> {
        Coeffs {
            friction: self.params.friction / self.params.m,
            w,
            kappa: self.params.kappa(),
            transport: &self.transport_velocity,
        }
    }

    fn rhs(&self, lay: &Layout) -> Vec<f64> {
        let inv_m = 1.0 / self.params.m;
        assembly::rhs(lay, &self.rhs_g.scaled(inv_m), &self.rhs_h, inv_m)
    }

    fn is_homogeneous(&self) -> bool {
        self.rhs_g.max_abs() == 0.0 && self.rhs_h.max_abs() == 0.0
    }
}

/// Relative residuals of a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearResiduals {
    pub continuity: f64,
    pub momentum: f64,
    /// `|int r| / int |r|`.
    pub mean: f64,
    /// Largest wall-normal velocity.
    pub wall: f64,
}

impl LinearResiduals {
    pub fn max(&self) -> f64 {
        self.continuity.max(self.momentum).max(self.mean).max(self.wall)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub r: ScalarField,
    pub u: VectorField,
    pub residuals: LinearResiduals,
    pub flux_trace: Option<DecompositionTrace>,
}

fn rel(num: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        num / scale
    } else {
        num
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Residuals of `(r, u)` in the scaled system, relative to `|b| + |A||x|`.
pub fn residuals(prob: &LinearizedProblem, r: &ScalarField, u: &VectorField) -> LinearResiduals {
    let lay = Layout::new(prob.grid());
    let w = prob.mass_flux();
    let c = prob.coeffs(&w);
    let q = r.scaled(prob.params.q_scale());
    let x = lay.pack(&q.values, u);
    let ax = assembly::apply(&lay, &c, &x);
    let axa = assembly::apply_abs(&lay, &c, &x);
    let b = prob.rhs(&lay);
    let nc = lay.grid.n_cells();
    let mom = lay.n;
    let res: Vec<f64> = ax.iter().zip(&b).map(|(a, b)| a - b).collect();
    let scale: Vec<f64> = axa.iter().zip(&b).map(|(a, b)| a + b.abs()).collect();
    let sum: f64 = crate::field::compensated_sum(r.values.iter().copied());
    let abs: f64 = r.values.iter().map(|v| v.abs()).sum();
    LinearResiduals {
        continuity: rel(l2(&res[..nc]), l2(&scale[..nc])),
        momentum: rel(l2(&res[nc..mom]), l2(&scale[nc..mom])),
        mean: rel(sum.abs(), abs),
        wall: u.max_wall_normal(),
    }
}

/// Applies the linear operator: returns `(m div u + div(r uf), G)` where `G`
/// is the body force for which `(r, u)` solves the momentum equation with
/// the wall data of `prob`. Used to manufacture exact solutions.
pub fn apply_linear(prob: &LinearizedProblem, r: &ScalarField, u: &VectorField) -> (ScalarField, VectorField) {
    let g = prob.grid();
    let m = prob.params.m;
    let lay = Layout::new(g);
    let w = prob.mass_flux();
    let c = prob.coeffs(&w);
    let q = r.scaled(prob.params.q_scale());
    let x = lay.pack(&q.values, u);
    let mut ax = assembly::apply(&lay, &c, &x);
    let wall = assembly::rhs(&lay, &VectorField::zeros(g), &prob.rhs_h, 1.0 / m);
    ax.iter_mut().zip(&wall).for_each(|(a, h)| *a = m * (*a - h));
    let (cont, force) = lay.unpack(&ax);
    (ScalarField { grid: g, values: cont }, force)
}

/// Sparse direct solve of the full system.
pub fn solve_monolithic(prob: &LinearizedProblem) -> Result<LinearSolution> {
    prob.validate()?;
    let g = prob.grid();
    if prob.is_homogeneous() {
        return Ok(LinearSolution {
            r: ScalarField::zeros(g),
            u: VectorField::zeros(g),
            residuals: LinearResiduals::default(),
            flux_trace: None,
        });
    }
    let lay = Layout::new(g);
    let w = prob.mass_flux();
    let c = prob.coeffs(&w);
    let b = prob.rhs(&lay);
    let x = assembly::solve(g, &c, &b)?;
    let (q, u) = lay.unpack(&x);
    let r = ScalarField { grid: g, values: q }.scaled(1.0 / prob.params.q_scale());
    let residuals = residuals(prob, &r, &u);
    if residuals.max() > 1e-9 {
        return Err(Error::Solver {
            reason: format!("monolithic residuals above tolerance: {residuals:?}"),
            residual: residuals.max(),
        });
    }
    Ok(LinearSolution { r, u, residuals, flux_trace: None })
}

/// Oseen problem `-div(2 D(u)) + w . grad u + grad q = force`, `div u = 0`,
/// with slip walls and friction `friction`. Returns the mean-zero pressure
/// and the velocity.
pub fn solve_oseen(w: &VectorField, force: &VectorField, friction: f64) -> Result<(ScalarField, VectorField)> {
    let g = w.grid;
    if g.periodic() {
        return Err(Error::InvalidGrid("linear solves need slip walls on all sides".into()));
    }
    if force.grid != g {
        return Err(Error::GridMismatch);
    }
    if !w.is_wall_compatible() {
        return Err(Error::Invariant("convecting velocity must vanish normal to the walls".into()));
    }
    if !(w.is_finite() && force.is_finite() && friction.is_finite()) {
        return Err(Error::NonFinite("Oseen data"));
    }
    if force.max_abs() == 0.0 {
        return Ok((ScalarField::zeros(g), VectorField::zeros(g)));
    }
    let lay = Layout::new(g);
    let zero = VectorField::zeros(g);
    let c = Coeffs { friction, w, kappa: 0.0, transport: &zero };
    let b = assembly::rhs(&lay, force, &WallTraction::zeros(g), 1.0);
    let x = assembly::solve(g, &c, &b)?;
    let (q, u) = lay.unpack(&x);
    Ok((ScalarField { grid: g, values: q }, u))
}

/// Terms of the energy identity obtained by testing momentum with `u` and
/// continuity with `gamma m^(gamma-2) r`:
/// `dissipation + friction = forcing + wall + pressure + convection`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// `sum 2m |D(u)|^2`.
    pub dissipation: f64,
    /// `f sum |u.t|^2` over the walls.
    pub friction: f64,
    /// `<G, u>`.
    pub forcing: f64,
    /// `sum h u.t` over the walls.
    pub wall: f64,
    /// `gamma m^(gamma-1) <r, div u>`, which the continuity equation turns
    /// into a transport term.
    pub pressure: f64,
    /// `-<(m + rt) ub . grad u, u>`; zero up to round-off by skew symmetry.
    pub convection: f64,
}

impl EnergyBalance {
    pub fn defect(&self) -> f64 {
        let lhs = self.dissipation + self.friction;
        let rhs = self.forcing + self.wall + self.pressure + self.convection;
        let scale = lhs.abs() + self.forcing.abs() + self.wall.abs() + self.pressure.abs() + self.convection.abs();
        rel((lhs - rhs).abs(), scale)
    }
}

pub fn energy_balance(prob: &LinearizedProblem, r: &ScalarField, u: &VectorField) -> EnergyBalance {
    let g = prob.grid();
    let p = &prob.params;
    let (hx, hy) = (g.hx(), g.hy());
    let area = hx * hy;
    let mut diss = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let dx = (u.x_at(i + 1, j) - u.x_at(i, j)) / hx;
            let dy = (u.y_at(i, j + 1) - u.y_at(i, j)) / hy;
            diss += 2.0 * area * (dx * dx + dy * dy);
        }
    }
    for j in 1..g.ny {
        for i in 1..g.nx {
            let t = (u.x_at(i, j) - u.x_at(i, j - 1)) / hy + (u.y_at(i, j) - u.y_at(i - 1, j)) / hx;
            diss += area * t * t;
        }
    }
    let mut fric = 0.0;
    for i in 1..g.nx {
        fric += hx * (u.x_at(i, 0).powi(2) + u.x_at(i, g.ny - 1).powi(2));
    }
    for j in 1..g.ny {
        fric += hy * (u.y_at(0, j).powi(2) + u.y_at(g.nx - 1, j).powi(2));
    }
    let face_dot = |a: &VectorField, b: &VectorField| -> f64 {
        let mut s = 0.0;
        for j in 0..g.ny {
            for i in 1..g.nx {
                s += a.x_at(i, j) * b.x_at(i, j);
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                s += a.y_at(i, j) * b.y_at(i, j);
            }
        }
        s * area
    };
    let conv = convection(&prob.mass_flux(), u);
    let div = divergence(u);
    let pressure = p.m * p.q_scale() * area * r.values.iter().zip(&div.values).map(|(a, b)| a * b).sum::<f64>();
    EnergyBalance {
        dissipation: p.m * diss,
        friction: p.friction * fric,
        forcing: face_dot(&prob.rhs_g, u),
        wall: prob.rhs_h.work(u),
        pressure,
        convection: -p.m * face_dot(&conv, u),
    }
}

/// `||u||_{1,2}`, the velocity norm used for solver comparisons.
pub fn h1_norm(u: &VectorField) -> f64 {
    sobolev_norm(u, 1, Exponent::TWO).expect("order 1")
}

pub fn l2_norm(r: &ScalarField) -> f64 {
    lp_norm(r, Exponent::TWO)
}

#[cfg(test)]
mod tests;
