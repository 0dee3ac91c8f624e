use crate::error::{Error, Result};
use crate::field::{divergence, lp_norm, Exponent, ScalarField, VectorField};
use crate::iteration::LoopReport;
use crate::linsolve::{h1_norm, solve_oseen};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Relative `||u_k+1 - u_k||_{1,2}`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions { tol: 1e-12, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub u: VectorField,
    pub pressure: ScalarField,
    pub report: LoopReport,
    /// `||div u||_2 / ||grad u||_2`.
    pub divergence: f64,
}

/// Steady incompressible flow `u . grad u - div(2 D(u)) + grad q = force`,
/// `div u = 0`, with slip walls and wall friction `friction`, by Picard
/// iteration on the convecting velocity.
pub fn incompressible_reference_solve(force: &VectorField, friction: f64) -> Result<ReferenceSolution> {
    incompressible_reference_with(force, friction, &ReferenceOptions::default())
}

pub fn incompressible_reference_with(
    force: &VectorField,
    friction: f64,
    opts: &ReferenceOptions,
) -> Result<ReferenceSolution> {
    let g = force.grid;
    let mut u = VectorField::zeros(g);
    let mut pressure: ScalarField;
    let mut report = LoopReport::default();
    loop {
        let (q, next) = solve_oseen(&u, force, friction)?;
        let diff = h1_norm(&next.sub(&u));
        let size = h1_norm(&next);
        report.push(diff, size);
        u = next;
        pressure = q;
        if diff <= opts.tol * size {
            report.converged = true;
            break;
        }
        if report.iterates >= opts.max_iter || !diff.is_finite() {
            return Err(Error::NonConvergent { what: "incompressible Picard", iterations: report.iterates, last: diff / size });
        }
    }
    let gu = crate::field::grad_seminorm(&u, Exponent::TWO);
    let divergence = if gu > 0.0 { lp_norm(&divergence(&u), Exponent::TWO) / gu } else { 0.0 };
    Ok(ReferenceSolution { u, pressure, report, divergence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gradient, random, GridSpec};

    #[test]
    fn zero_force() {
        let g = GridSpec::unit_square(16);
        let s = incompressible_reference_solve(&VectorField::zeros(g), 0.0).unwrap();
        assert_eq!(s.u.max_abs(), 0.0);
        assert_eq!(s.report.iterates, 1);
    }

    #[test]
    fn gradient_force_is_absorbed() {
        let g = GridSpec::unit_square(16);
        let mut rng = random::rng(3);
        let s = random::smooth_mean_zero(g, &mut rng, 3);
        let f = gradient(&s).with_walls_zeroed();
        let sol = incompressible_reference_solve(&f, 0.5).unwrap();
        assert!(sol.u.max_abs() < 1e-12 * f.max_abs());
        // The pressure is the potential up to a constant.
        let d = sol.pressure.sub(&s);
        let spread = d.values.iter().fold(f64::MIN, |a, v| a.max(*v)) - d.values.iter().fold(f64::MAX, |a, v| a.min(*v));
        assert!(spread < 1e-10 * s.max_abs());
    }

    #[test]
    fn vortex_force_is_divergence_free() {
        let g = GridSpec::unit_square(24);
        let f = crate::forcing::preset_force(g, crate::forcing::ForcePreset::Vortex, 5.0, 4.0).unwrap();
        let sol = incompressible_reference_solve(&f, 0.0).unwrap();
        assert!(sol.u.max_abs() > 0.0);
        assert!(sol.divergence < 1e-10, "{}", sol.divergence);
        assert!(sol.report.converged);
    }
}
