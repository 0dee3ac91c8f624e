//! Decomposition solver. With `d = div u` and `omega` the node vorticity,
//! the viscous term splits as `-div(2 D(u)) = curl omega - 2 grad d`, so the
//! scaled momentum equation reads
//!
//! ```text
//! curl omega + grad P = G/m - C(w) u,    P = q - 2 d,    q = gamma m^(gamma-2) r
//! ```
//!
//! Each sweep solves, in order: a Dirichlet problem for `omega` (wall values
//! from the wall law), a Neumann problem for `P`, the transport equation
//! `q + 2 kappa div(q uf) = P` by Neumann series, a Neumann problem for the
//! potential `Phi` with `Delta Phi = (q - P)/2`, and a Dirichlet problem for
//! the streamfunction. Then `u = curl psi + grad Phi`.

use std::path::PathBuf;

use super::{face_product, h1_norm, residuals, LinearResiduals, LinearSolution, LinearizedProblem};
use crate::error::{Error, Result};
use crate::field::{
    curl_of_stream, divergence, gradient, lp_norm, write_field, AnyField, Exponent, NodeField,
    ScalarField, VectorField,
};
use crate::helmholtz::{dirichlet_node_solve, solve_scaled, NeumannFlux};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedOptions {
    /// Largest accepted transport smallness `||uf||_{2,p} / (gamma m^(gamma-1))`.
    pub alpha: f64,
    pub max_sweeps: usize,
    /// Relative change in `||u||_{1,2}` at which the sweep stops.
    pub tol: f64,
    /// Writes `omega`, `P` and the potential after every sweep.
    pub dump_dir: Option<PathBuf>,
}

impl Default for DecomposedOptions {
    fn default() -> Self {
        DecomposedOptions { alpha: 0.1, max_sweeps: 200, tol: 1e-12, dump_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTrace {
    pub omega: NodeField,
    /// Effective viscous flux `P = gamma m^(gamma-2) r - 2 div u`.
    pub p_flux: ScalarField,
    pub potential: ScalarField,
    /// `||P - (gamma m^(gamma-2) r - 2 div u)||_2 / ||P||_2` on the output.
    pub consistency: f64,
    pub sweeps: usize,
    /// Successive-change ratios of the sweep.
    pub sweep_ratios: Vec<f64>,
    /// Neumann-series iterations of the last transport solve.
    pub transport_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportReport {
    pub iterations: usize,
    /// Geometric mean of the series ratios.
    pub ratio: f64,
    /// `||q + 2 kappa div(q uf) - P||_2 / ||P||_2`.
    pub residual: f64,
}

/// Scaled momentum right side `G/m - C(w) u` on interior faces.
fn momentum_source(prob: &LinearizedProblem, u: &VectorField) -> VectorField {
    let conv = super::convection(&prob.mass_flux(), u);
    prob.rhs_g.scaled(1.0 / prob.params.m).sub(&conv).with_walls_zeroed()
}

/// Node vorticity on the wall, from the wall law with the current velocity.
fn wall_vorticity(prob: &LinearizedProblem, u: &VectorField) -> NodeField {
    let g = prob.grid();
    let (m, f, h) = (prob.params.m, prob.params.friction, &prob.rhs_h);
    let mut w = NodeField::zeros(g);
    for i in 1..g.nx {
        w.values[g.node(i, 0)] = (h.bottom[i] - f * u.x_at(i, 0)) / m;
        w.values[g.node(i, g.ny)] = (f * u.x_at(i, g.ny - 1) - h.top[i]) / m;
    }
    for j in 1..g.ny {
        w.values[g.node(0, j)] = (f * u.y_at(0, j) - h.left[j]) / m;
        w.values[g.node(g.nx, j)] = (h.right[j] - f * u.y_at(g.nx - 1, j)) / m;
    }
    w
}

/// Node curl `d(vy)/dx - d(vx)/dy` at interior nodes.
fn interior_curl(v: &VectorField) -> NodeField {
    let g = v.grid;
    let mut c = NodeField::zeros(g);
    for j in 1..g.ny {
        for i in 1..g.nx {
            c.values[g.node(i, j)] =
                (v.y_at(i, j) - v.y_at(i - 1, j)) / g.hx() - (v.x_at(i, j) - v.x_at(i, j - 1)) / g.hy();
        }
    }
    c
}

/// Face field `curl omega = (d omega/dy, -d omega/dx)`.
fn node_curl_faces(w: &NodeField) -> VectorField {
    curl_of_stream(w)
}

/// Vorticity for the current velocity: `-Delta omega = curl(G/m - C u)`
/// inside, wall values from the friction law and `h`.
pub fn vorticity_solve(prob: &LinearizedProblem, u_current: &VectorField) -> Result<NodeField> {
    if !u_current.is_wall_compatible() {
        return Err(Error::Invariant("current velocity must vanish normal to the walls".into()));
    }
    let src = interior_curl(&momentum_source(prob, u_current));
    dirichlet_node_solve(&src, &wall_vorticity(prob, u_current))
}

/// Mean-zero `P` with `grad P = G/m - C u - curl omega` on interior faces.
pub fn effective_flux(prob: &LinearizedProblem, omega: &NodeField, u_current: &VectorField) -> Result<ScalarField> {
    let g = prob.grid();
    let source = momentum_source(prob, u_current);
    let curl = node_curl_faces(omega);
    let target = source.sub(&curl).with_walls_zeroed();
    let scale = lp_norm(&target, Exponent::TWO);
    // The target may be round-off of two nearly equal terms.
    let parts = lp_norm(&source, Exponent::TWO) + lp_norm(&curl.with_walls_zeroed(), Exponent::TWO);
    let inv_h = 1.0 / g.hx() + 1.0 / g.hy();
    let p = solve_scaled(
        &divergence(&target),
        &NeumannFlux::zero(g),
        inv_h * scale * g.area().sqrt(),
        inv_h * scale,
    )?;
    let miss = lp_norm(&gradient(&p).sub(&target), Exponent::TWO);
    if miss > 1e-8 * parts.max(f64::MIN_POSITIVE) && miss > 1e-300 {
        return Err(Error::Solver {
            reason: "flux right side is not a gradient; vorticity inconsistent with velocity".into(),
            residual: miss,
        });
    }
    Ok(p)
}

/// Solves `r + div(2 r uf / (gamma m^(gamma-1))) = P / (gamma m^(gamma-2))`
/// by Neumann series and returns `r`.
pub fn transport_solve(
    p: &ScalarField,
    uf: &VectorField,
    params: &ModelParams,
) -> Result<(ScalarField, TransportReport)> {
    if !uf.is_wall_compatible() {
        return Err(Error::Invariant("transport velocity must vanish normal to the walls".into()));
    }
    let kappa = params.kappa();
    let transport = |q: &ScalarField| divergence(&face_product(q, uf)).scaled(2.0 * kappa);
    let pn = lp_norm(p, Exponent::TWO);
    let mut q = p.clone();
    let mut prev_step = f64::NAN;
    let mut log_ratio = 0.0;
    let mut iterations = 1;
    if uf.max_abs() > 0.0 && pn > 0.0 {
        loop {
            let next = p.sub(&transport(&q));
            let step = lp_norm(&next.sub(&q), Exponent::TWO);
            q = next;
            if iterations > 1 {
                let ratio = step / prev_step;
                if !(ratio < 1.0) {
                    return Err(Error::NonConvergent { what: "transport series", iterations, last: ratio });
                }
                log_ratio += ratio.ln();
            }
            iterations += 1;
            if step <= 1e-15 * pn {
                break;
            }
            if iterations > 1000 {
                return Err(Error::NonConvergent { what: "transport series", iterations, last: step / pn });
            }
            prev_step = step;
        }
    }
    let residual = if pn > 0.0 { lp_norm(&q.add(&transport(&q)).sub(p), Exponent::TWO) / pn } else { 0.0 };
    let ratio = if iterations > 2 { (log_ratio / (iterations - 2) as f64).exp() } else { 0.0 };
    let r = q.scaled(1.0 / params.q_scale());
    Ok((r, TransportReport { iterations: iterations.saturating_sub(1).max(1), ratio, residual }))
}

/// Neumann potential with `-2 Delta Phi = P - gamma m^(gamma-2) r`.
pub fn potential_solve(p: &ScalarField, r: &ScalarField, params: &ModelParams) -> Result<ScalarField> {
    let g = p.grid;
    let q = r.scaled(params.q_scale());
    let rhs = q.sub(p).scaled(0.5);
    let scale = lp_norm(&q, Exponent::TWO) + lp_norm(p, Exponent::TWO);
    solve_scaled(&rhs, &NeumannFlux::zero(g), 1e-3 * scale * g.area().sqrt(), 1e-3 * scale)
}

pub fn solve_decomposed(prob: &LinearizedProblem) -> Result<LinearSolution> {
    solve_decomposed_with(prob, &DecomposedOptions::default())
}

pub fn solve_decomposed_with(prob: &LinearizedProblem, opts: &DecomposedOptions) -> Result<LinearSolution> {
    prob.validate()?;
    let g = prob.grid();
    let params = &prob.params;
    let small = prob.transport_smallness();
    if small > opts.alpha {
        return Err(Error::Admissibility(format!(
            "transport smallness {small:.3e} exceeds alpha = {}; mass too small for the decomposition",
            opts.alpha
        )));
    }
    if prob.is_homogeneous() {
        let zero = ScalarField::zeros(g);
        return Ok(LinearSolution {
            r: zero.clone(),
            u: VectorField::zeros(g),
            residuals: LinearResiduals::default(),
            flux_trace: Some(DecompositionTrace {
                omega: NodeField::zeros(g),
                p_flux: zero.clone(),
                potential: zero,
                consistency: 0.0,
                sweeps: 0,
                sweep_ratios: Vec::new(),
                transport_iterations: 0,
            }),
        });
    }
    if let Some(dir) = &opts.dump_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut u = VectorField::zeros(g);
    let mut ratios = Vec::new();
    let mut prev_change = f64::NAN;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let omega = vorticity_solve(prob, &u)?;
        let p = effective_flux(prob, &omega, &u)?;
        let (r, tr) = transport_solve(&p, &prob.transport_velocity, params)?;
        let phi = potential_solve(&p, &r, params)?;
        let psi = dirichlet_node_solve(&omega, &NodeField::zeros(g))?;
        let next = curl_of_stream(&psi).add(&gradient(&phi));
        let change = h1_norm(&next.sub(&u)) / h1_norm(&next).max(f64::MIN_POSITIVE);
        if sweeps > 1 {
            ratios.push(change / prev_change);
        }
        prev_change = change;
        u = next;
        if let Some(dir) = &opts.dump_dir {
            for (name, f) in [
                ("omega", AnyField::from(omega.clone())),
                ("flux", AnyField::from(p.clone())),
                ("potential", AnyField::from(phi.clone())),
            ] {
                let mut file = std::fs::File::create(dir.join(format!("sweep{sweeps:03}_{name}.hvf")))?;
                write_field(&mut file, &f)?;
            }
        }
        if change <= opts.tol {
            let q = r.scaled(params.q_scale());
            let defect = lp_norm(&p.sub(&q.sub(&divergence(&u).scaled(2.0))), Exponent::TWO);
            let consistency = defect / lp_norm(&p, Exponent::TWO).max(f64::MIN_POSITIVE);
            let residuals = residuals(prob, &r, &u);
            return Ok(LinearSolution {
                r,
                u,
                residuals,
                flux_trace: Some(DecompositionTrace {
                    omega,
                    p_flux: p,
                    potential: phi,
                    consistency,
                    sweeps,
                    sweep_ratios: ratios,
                    transport_iterations: tr.iterations,
                }),
            });
        }
        if sweeps >= opts.max_sweeps || !change.is_finite() {
            return Err(Error::NonConvergent { what: "decomposition sweep", iterations: sweeps, last: change });
        }
    }
}
