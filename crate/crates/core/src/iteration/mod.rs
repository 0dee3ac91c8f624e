//! Nested fixed-point loops for the nonlinear problem
//!
//! ```text
//! div((m + r) u) = 0
//! (m + r) u . grad u - div(2 (m + r) D(u)) + grad (m + r)^gamma = (m + r) f
//! u . n = 0,   n . 2 (m + r) D(u) . t + f_w u . t = 0,   int r = 0
//! ```
//!
//! From the inside out: [`inner_banach`] freezes the density offset and the
//! convecting velocity and iterates on the velocity that carries the
//! variable-viscosity and transport terms; [`density_loop`] iterates on the
//! density offset; [`outer_loop`] iterates (with optional damping) on the
//! convecting velocity. Every level records successive differences and their
//! ratios in a [`LoopReport`].

pub mod bounds;
mod loops;
pub mod manufactured;
mod residual;
pub mod taylor;

use std::path::PathBuf;

pub use bounds::{
    check_admissible, smallness_gate, AdmissibilityReport, AdmissibleBounds, Certificates, Check, GateConstants,
    GateReport,
};
pub use loops::{
    calibrate, density_loop, density_loop_from, inner_banach, inner_banach_from, outer_loop, Calibration,
    DensityOutcome, InnerOutcome, OuterOutcome,
};
pub use residual::{nonlinear_residual, NonlinearResidual};
pub use taylor::{pressure_gradient, taylor_remainder, taylor_remainder_grad};

use crate::field::{ScalarField, VectorField};

/// Linear solver used at every inner step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    Monolithic,
    Decomposed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative `||grad(u_k+1 - u_k)||_2`.
    pub inner: f64,
    /// `||r_n+1 - r_n||_2` relative to `||r||_2 + ||grad u||_2 / (gamma m^(gamma-2))`,
    /// the density scale at which the pressure gradient balances viscosity.
    pub density: f64,
    /// Relative `||u_k+1 - u_k||_{1,2}`.
    pub outer: f64,
    /// Largest accepted relative nonlinear residual.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { inner: 1e-10, density: 1e-9, outer: 1e-8, residual: 1e-7 }
    }
}

/// Starting velocity of the outer loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    #[default]
    Zero,
    Velocity(VectorField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopOptions {
    pub tol: Tolerances,
    pub max_inner: usize,
    pub max_density: usize,
    pub max_outer: usize,
    /// Outer damping; halved whenever a contraction ratio exceeds 0.95.
    pub theta: f64,
    pub solver: Solver,
    /// Turn admissibility and gate violations into errors.
    pub strict: bool,
    /// Admissible sets to monitor; `None` skips the checks.
    pub bounds: Option<AdmissibleBounds>,
    pub gate: GateConstants,
    pub init: Init,
    /// Per outer iterate: `r` and `u` field files plus a text sidecar.
    pub checkpoint_dir: Option<PathBuf>,
    /// Text embedded in every checkpoint file (field trailer and sidecar).
    pub checkpoint_tag: Option<String>,
}

impl Default for LoopOptions {
    fn default() -> Self {
        LoopOptions {
            tol: Tolerances::default(),
            max_inner: 100,
            max_density: 100,
            max_outer: 200,
            theta: 1.0,
            solver: Solver::Monolithic,
            strict: false,
            bounds: None,
            gate: GateConstants::default(),
            init: Init::Zero,
            checkpoint_dir: None,
            checkpoint_tag: None,
        }
    }
}

/// Differences below this fraction of the iterate size are round-off and
/// do not enter the contraction ratios.
pub const RATIO_NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoopReport {
    pub iterates: usize,
    /// Successive-difference norms, one per iterate.
    pub errors: Vec<f64>,
    /// `errors[k] / errors[k-1]` where both differences are above the noise
    /// floor.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    pub final_residual: f64,
    pub warnings: Vec<String>,
}

impl LoopReport {
    /// Geometric mean of the contraction ratios.
    pub fn mean_ratio(&self) -> Option<f64> {
        if self.contraction_ratios.is_empty() {
            return None;
        }
        let s: f64 = self.contraction_ratios.iter().map(|r| r.ln()).sum();
        Some((s / self.contraction_ratios.len() as f64).exp())
    }

    /// Least-squares fit of `ln errors[k] = a + k ln q`; returns `(q, R^2)`.
    pub fn geometric_fit(&self) -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .errors
            .iter()
            .enumerate()
            .filter(|(_, e)| **e > 0.0)
            .map(|(k, e)| (k as f64, e.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let fit = crate::diagnostics::fit_line(&pts)?;
        Some((fit.slope.exp(), fit.r_squared))
    }

    pub(crate) fn push(&mut self, diff: f64, size: f64) {
        if let Some(&prev) = self.errors.last() {
            let floor = RATIO_NOISE_FLOOR * size;
            if prev > floor && diff > floor {
                self.contraction_ratios.push(diff / prev);
            }
        }
        self.errors.push(diff);
        self.iterates += 1;
    }
}

/// A candidate solution with its admissibility certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub r: ScalarField,
    pub u: VectorField,
    pub certificates: Certificates,
}
