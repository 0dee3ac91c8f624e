//! Admissible sets and the smallness gate.

use crate::field::{
    divergence, grad_seminorm, hessian_seminorm, lp_norm, sobolev_norm, Exponent, ScalarField,
    VectorField,
};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleBounds {
    /// A priori bound on the solution size.
    pub c_f: f64,
    /// Bound on `||grad u||_2`.
    pub energy: f64,
    /// Transport smallness.
    pub alpha: f64,
}

impl AdmissibleBounds {
    /// Bounds that admit everything; useful for calibration runs.
    pub fn unbounded() -> Self {
        AdmissibleBounds { c_f: f64::INFINITY, energy: f64::INFINITY, alpha: 0.1 }
    }

    /// Bounds from measured certificates with a safety `margin`:
    /// `E = margin ||grad u||_2` and `C_f` large enough for every
    /// norm-sum certificate and for the divergence certificate.
    pub fn from_certificates(c: &Certificates, margin: f64, alpha: f64) -> Self {
        let c_f = margin * c.r_bound.max(c.u_bound).max(c.xi).max((0.5 * c.div_bound).sqrt());
        AdmissibleBounds { c_f: c_f.max(f64::MIN_POSITIVE), energy: (margin * c.energy).max(f64::MIN_POSITIVE), alpha }
    }

    /// The right side of the a priori bound has the form
    /// `C (1 + ||f||_p + ||f||_{6/5}^((2p+6)/(6-p)) E^(3p/(6-p)))`; returns the
    /// bracket so `C = c_f / bracket` can be reported.
    pub fn force_bracket(params: &ModelParams, energy: f64) -> f64 {
        let p = params.p_exp;
        1.0 + params.force_norm(p)
            + params.force_norm(1.2).powf((2.0 * p + 6.0) / (6.0 - p)) * energy.powf(3.0 * p / (6.0 - p))
    }
}

/// Measured quantities that define membership in the admissible sets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Certificates {
    /// `m^(gamma-2) (||r||_inf + ||grad r||_p)`.
    pub r_bound: f64,
    /// `||grad u||_2`.
    pub energy: f64,
    /// `||grad u||_inf + ||u||_inf + ||grad^2 u||_p`.
    pub u_bound: f64,
    /// `m^(gamma-1) ||div u||_p`.
    pub div_bound: f64,
    /// `|int r| / int |r|`.
    pub mean: f64,
    /// `m^(gamma-2) ||r||_{1,p} + ||u||_{2,p}`.
    pub xi: f64,
}

impl Certificates {
    pub fn measure(r: &ScalarField, u: &VectorField, params: &ModelParams) -> Self {
        let (m, g) = (params.m, params.gamma);
        let p = params.p();
        let mean = {
            let a = r.abs_integral();
            if a > 0.0 {
                r.integral().abs() / a
            } else {
                0.0
            }
        };
        let sr = m.powf(g - 2.0);
        Certificates {
            r_bound: sr * (lp_norm(r, Exponent::INF) + grad_seminorm(r, p)),
            energy: grad_seminorm(u, Exponent::TWO),
            u_bound: grad_seminorm(u, Exponent::INF) + lp_norm(u, Exponent::INF) + hessian_seminorm(u, p),
            div_bound: m.powf(g - 1.0) * lp_norm(&divergence(u), p),
            mean,
            xi: sr * sobolev_norm(r, 1, p).expect("order 1") + sobolev_norm(u, 2, p).expect("order 2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub checks: Vec<Check>,
}

impl AdmissibilityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn summary(&self) -> String {
        let bad: Vec<String> =
            self.failures().map(|c| format!("{} = {:.3e} > {:.3e}", c.name, c.value, c.limit)).collect();
        if bad.is_empty() {
            "admissible".into()
        } else {
            bad.join(", ")
        }
    }
}

/// Membership of `(r, u)` in the discrete admissible sets.
pub fn check_admissible(c: &Certificates, bounds: &AdmissibleBounds) -> AdmissibilityReport {
    let check = |name, value: f64, limit: f64| Check { name, value, limit, pass: value <= limit };
    AdmissibilityReport {
        checks: vec![
            check("density bound", c.r_bound, bounds.c_f),
            check("zero mean", c.mean, 1e-12),
            check("energy", c.energy, bounds.energy),
            check("velocity bound", c.u_bound, bounds.c_f),
            check("divergence bound", c.div_bound, 2.0 * bounds.c_f * bounds.c_f),
        ],
    }
}

/// Constants of the functional inequalities that enter the gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConstants {
    pub poincare: f64,
    pub korn: f64,
    pub embedding: f64,
    pub bogovskii: f64,
    /// Inner contraction constant: ratio times `m`.
    pub c1: f64,
    /// Density contraction constant.
    pub c2: f64,
}

impl Default for GateConstants {
    fn default() -> Self {
        GateConstants {
            poincare: 1.0 / std::f64::consts::PI,
            korn: 1.0,
            embedding: 1.0,
            bogovskii: 1.0,
            c1: 1.0,
            c2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateReport {
    /// `min(m, m^((gamma-1)/4)) / (1/alpha + 15)`.
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// The smallness condition on `m` relative to the bounds and constants.
pub fn smallness_gate(params: &ModelParams, bounds: &AdmissibleBounds, k: &GateConstants) -> GateReport {
    let m = params.m;
    let lhs = m.min(m.powf((params.gamma - 1.0) / 4.0)) / (1.0 / bounds.alpha + 15.0);
    let (c, e2) = (bounds.c_f, bounds.energy * bounds.energy);
    let a = [c, c * c, c * e2, c * c * e2, k.c1, k.c2].into_iter().fold(0.0, f64::max);
    let b = [k.poincare, k.korn, k.embedding, k.bogovskii].into_iter().fold(0.0, f64::max);
    let rhs = a * b;
    GateReport { lhs, rhs, pass: lhs > rhs }
}
