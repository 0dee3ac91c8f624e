//! Discrete Helmholtz decomposition `g = P_H g + grad P_grad g` built on a
//! Neumann Poisson solve.

pub(crate) mod poisson;

use crate::error::{Error, Result};
use crate::field::{
    compensated_sum, divergence, gradient, lp_norm, Exponent, GridSpec, NodeField, ScalarField,
    VectorField,
};
use poisson::{CellNeumann, NodeDirichlet};

/// Outward normal derivative `d phi/dn` on the wall faces.
///
/// `left`/`right` have `ny` entries (empty for periodic grids), `bottom`/`top`
/// have `nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannFlux {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub bottom: Vec<f64>,
    pub top: Vec<f64>,
}

impl NeumannFlux {
    pub fn zero(g: GridSpec) -> Self {
        let side = if g.periodic() { 0 } else { g.ny };
        NeumannFlux { left: vec![0.0; side], right: vec![0.0; side], bottom: vec![0.0; g.nx], top: vec![0.0; g.nx] }
    }

    /// `v . n` on the walls.
    pub fn from_normal_trace(v: &VectorField) -> Self {
        let g = v.grid;
        let mut f = NeumannFlux::zero(g);
        if !g.periodic() {
            for j in 0..g.ny {
                f.left[j] = -v.x_at(0, j);
                f.right[j] = v.x_at(g.nx, j);
            }
        }
        for i in 0..g.nx {
            f.bottom[i] = -v.y_at(i, 0);
            f.top[i] = v.y_at(i, g.ny);
        }
        f
    }

    /// Boundary integral `sum flux * edge length`.
    pub fn integral(&self, g: &GridSpec) -> f64 {
        compensated_sum(self.left.iter().chain(&self.right).map(|v| v * g.hy()))
            + compensated_sum(self.bottom.iter().chain(&self.top).map(|v| v * g.hx()))
    }

    fn abs_integral(&self, g: &GridSpec) -> f64 {
        self.left.iter().chain(&self.right).map(|v| v.abs() * g.hy()).sum::<f64>()
            + self.bottom.iter().chain(&self.top).map(|v| v.abs() * g.hx()).sum::<f64>()
    }

    fn check_shape(&self, g: &GridSpec) -> Result<()> {
        let side = if g.periodic() { 0 } else { g.ny };
        if self.left.len() != side || self.right.len() != side || self.bottom.len() != g.nx || self.top.len() != g.nx {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Face field equal to the flux (as a coordinate component) on wall faces
    /// and zero inside.
    fn wall_faces(&self, g: GridSpec) -> VectorField {
        let mut v = VectorField::zeros(g);
        if !g.periodic() {
            for j in 0..g.ny {
                v.xcomp[g.xf(0, j)] = -self.left[j];
                v.xcomp[g.xf(g.nx, j)] = self.right[j];
            }
        }
        for i in 0..g.nx {
            v.ycomp[g.yf(i, 0)] = -self.bottom[i];
            v.ycomp[g.yf(i, g.ny)] = self.top[i];
        }
        v
    }
}

/// Discrete Laplacian `div(grad phi)` where wall faces carry the given flux.
pub fn neumann_laplacian(phi: &ScalarField, flux: &NeumannFlux) -> ScalarField {
    let g = phi.grid;
    let grad = gradient(phi).add(&flux.wall_faces(g));
    divergence(&grad)
}

/// Gradient of `phi` whose wall faces carry the given flux.
pub fn gradient_with_flux(phi: &ScalarField, flux: &NeumannFlux) -> VectorField {
    gradient(phi).add(&flux.wall_faces(phi.grid))
}

/// Mean-zero `phi` with `Delta phi = rhs` and `d phi/dn = flux` on the walls.
pub fn neumann_poisson_solve(rhs: &ScalarField, flux: &NeumannFlux) -> Result<ScalarField> {
    solve_scaled(rhs, flux, 0.0, 0.0)
}

/// `floor_l1`/`floor_l2` lower-bound the data scale used by the compatibility
/// and residual checks, for right-hand sides that are themselves round-off
/// (the divergence of a nearly solenoidal field).
pub(crate) fn solve_scaled(
    rhs: &ScalarField,
    flux: &NeumannFlux,
    floor_l1: f64,
    floor_l2: f64,
) -> Result<ScalarField> {
    let g = rhs.grid;
    flux.check_shape(&g)?;
    if !rhs.is_finite() {
        return Err(Error::NonFinite("poisson rhs"));
    }
    let (int_rhs, int_flux) = (rhs.integral(), flux.integral(&g));
    let scale = (rhs.abs_integral() + flux.abs_integral(&g)).max(floor_l1);
    if (int_rhs - int_flux).abs() > 1e-10 * scale {
        return Err(Error::Incompatible { rhs: int_rhs, flux: int_flux });
    }
    if rhs.max_abs() == 0.0 && flux.abs_integral(&g) == 0.0 {
        return Ok(ScalarField::zeros(g));
    }
    // Move the wall flux into the right-hand side of the homogeneous problem.
    let mut b = rhs.values.clone();
    for j in 0..g.ny {
        if !g.periodic() {
            b[g.cell(0, j)] -= flux.left[j] / g.hx();
            b[g.cell(g.nx - 1, j)] -= flux.right[j] / g.hx();
        }
    }
    for i in 0..g.nx {
        b[g.cell(i, 0)] -= flux.bottom[i] / g.hy();
        b[g.cell(i, g.ny - 1)] -= flux.top[i] / g.hy();
    }
    // Remove the round-off incompatibility before the pinned solve.
    let bmean = compensated_sum(b.iter().copied()) / b.len() as f64;
    b.iter_mut().for_each(|v| *v -= bmean);

    let phi = ScalarField { grid: g, values: CellNeumann::for_grid(g)?.solve(&b) };
    let res = lp_norm(&neumann_laplacian(&phi, flux).sub(rhs), Exponent::TWO);
    let rn = (lp_norm(rhs, Exponent::TWO) + lp_norm(&flux.wall_faces(g), Exponent::TWO)).max(floor_l2);
    if res > 1e-10 * rn {
        return Err(Error::Solver { reason: "neumann poisson residual above tolerance".into(), residual: res });
    }
    Ok(phi)
}

/// Solves `-Delta w = f` at interior nodes with `w` prescribed on wall nodes.
/// Interior entries of `boundary` and wall entries of `f` are ignored.
pub fn dirichlet_node_solve(f: &NodeField, boundary: &NodeField) -> Result<NodeField> {
    let g = f.grid;
    if boundary.grid != g {
        return Err(Error::GridMismatch);
    }
    let values = NodeDirichlet::for_grid(g)?.solve(&f.values, &boundary.values);
    Ok(NodeField { grid: g, values })
}

/// 5-point `-Delta w` at interior nodes (zero on wall nodes).
pub fn node_neg_laplacian(w: &NodeField) -> NodeField {
    let g = w.grid;
    let (ax, ay) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let mut out = NodeField::zeros(g);
    for j in 1..g.ny {
        for i in 0..=g.nx {
            if w.is_boundary(i, j) {
                continue;
            }
            let (il, ir) = if g.periodic() {
                ((i + g.nx - 1) % g.nx, (i + 1) % g.nx)
            } else {
                (i - 1, i + 1)
            };
            out.values[g.node(i, j)] = ax * (2.0 * w.at(i, j) - w.at(il, j) - w.at(ir, j))
                + ay * (2.0 * w.at(i, j) - w.at(i, j - 1) - w.at(i, j + 1));
        }
    }
    out
}

/// Helmholtz split of a face field.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzSplit {
    /// `P_H g`: divergence-free, zero normal trace.
    pub solenoidal: VectorField,
    /// `P_grad g`: mean-zero potential.
    pub potential: ScalarField,
    /// `grad P_grad g`, carrying the normal trace of `g` on the walls.
    pub potential_grad: VectorField,
}

pub fn project(g: &VectorField) -> Result<HelmholtzSplit> {
    if !g.is_finite() {
        return Err(Error::NonFinite("projection input"));
    }
    let flux = NeumannFlux::from_normal_trace(g);
    let grid = g.grid;
    // Size of div g if no cancellation happened.
    let inv_h = 1.0 / grid.hx() + 1.0 / grid.hy();
    let floor_l1 = inv_h * lp_norm(g, Exponent::ONE);
    let floor_l2 = inv_h * lp_norm(g, Exponent::TWO);
    let potential = solve_scaled(&divergence(g), &flux, floor_l1, floor_l2)?;
    let potential_grad = gradient_with_flux(&potential, &flux);
    let mut solenoidal = g.sub(&potential_grad);
    // Exact zero normal trace rather than round-off.
    solenoidal = solenoidal.with_walls_zeroed();
    Ok(HelmholtzSplit { solenoidal, potential, potential_grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{inner, random, WallMode};
    use std::f64::consts::PI;

    #[test]
    fn zero_data_gives_zero() {
        let g = GridSpec::unit_square(8);
        let phi = neumann_poisson_solve(&ScalarField::zeros(g), &NeumannFlux::zero(g)).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
    }

    #[test]
    fn cosine_eigenmode() {
        // Discrete eigenvalue of the 3-point Neumann Laplacian for cos(pi x / L).
        let g = GridSpec::new(32, 16, 2.0, 1.0, WallMode::AllSlipWalls).unwrap();
        let k = PI / g.lx;
        let lam = (2.0 * (k * g.hx() / 2.0).sin() / g.hx()).powi(2);
        let rhs = ScalarField::from_fn(g, |x, _| lam * (k * x).cos());
        let phi = neumann_poisson_solve(&rhs, &NeumannFlux::zero(g)).unwrap();
        let exact = ScalarField::from_fn(g, |x, _| -(k * x).cos());
        assert!(lp_norm(&phi.sub(&exact), Exponent::INF) < 1e-11);
        // And against the continuous eigenfunction with continuous eigenvalue.
        let rhs = ScalarField::from_fn(g, |x, _| k * k * (k * x).cos());
        let phi = neumann_poisson_solve(&rhs, &NeumannFlux::zero(g)).unwrap();
        assert!(lp_norm(&phi.sub(&exact), Exponent::INF) < 2e-3);
    }

    #[test]
    fn constant_rhs_is_incompatible() {
        let g = GridSpec::unit_square(8);
        let e = neumann_poisson_solve(&ScalarField::constant(g, 1.0), &NeumannFlux::zero(g));
        assert!(matches!(e, Err(Error::Incompatible { .. })));
    }

    #[test]
    fn flux_data_round_trip() {
        let g = GridSpec::new(12, 10, 1.0, 0.8, WallMode::AllSlipWalls).unwrap();
        let mut r = random::rng(3);
        let v = random::random_vector(g, &mut r);
        let flux = NeumannFlux::from_normal_trace(&v);
        let phi = neumann_poisson_solve(&divergence(&v), &flux).unwrap();
        let back = neumann_laplacian(&phi, &flux);
        assert!(lp_norm(&back.sub(&divergence(&v)), Exponent::TWO) < 1e-10);
    }

    #[test]
    fn projection_of_gradient_and_solenoid() {
        let g = GridSpec::unit_square(16);
        let s = ScalarField::from_fn(g, |x, y| (PI * x).cos() * y * y);
        let split = project(&gradient(&s)).unwrap();
        assert!(split.solenoidal.max_abs() < 1e-10);
        let s0 = crate::field::mean_zero_project(&s);
        assert!(lp_norm(&split.potential.sub(&s0), Exponent::INF) < 1e-10);

        let mut r = random::rng(5);
        let psi = random::smooth_stream(g, &mut r, 3);
        let sol = crate::field::curl_of_stream(&psi);
        let split = project(&sol).unwrap();
        assert!(split.potential.max_abs() < 1e-12);
        assert!(lp_norm(&split.solenoidal.sub(&sol), Exponent::INF) < 1e-12);
    }

    #[test]
    fn random_split_properties_periodic() {
        let g = GridSpec::new(16, 12, 2.0, 1.0, WallMode::PeriodicX).unwrap();
        let mut r = random::rng(11);
        let v = random::random_vector(g, &mut r);
        let sp = project(&v).unwrap();
        let n = lp_norm(&v, Exponent::TWO);
        assert!(lp_norm(&sp.solenoidal.add(&sp.potential_grad).sub(&v), Exponent::TWO) < 1e-12 * n);
        assert!(lp_norm(&divergence(&sp.solenoidal), Exponent::TWO) < 1e-10 * n);
        assert!(inner(&sp.solenoidal, &sp.potential_grad).abs() < 1e-10 * n * n);
        let again = project(&sp.solenoidal).unwrap();
        assert!(lp_norm(&again.potential_grad, Exponent::TWO) < 1e-10 * n);
    }

    #[test]
    fn dirichlet_node_round_trip() {
        let g = GridSpec::unit_square(10);
        let w = NodeField::from_fn(g, |x, y| (x * 3.0).sin() * (y + 1.0));
        let f = node_neg_laplacian(&w);
        let back = dirichlet_node_solve(&f, &w).unwrap();
        assert!(back.sub(&w).values.iter().all(|v| v.abs() < 1e-12));
    }
}
