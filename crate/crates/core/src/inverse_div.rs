//! Right inverse of the divergence on mean-zero cell fields.
//!
//! `B[r] = grad(Delta_N^{-1} r)`. This satisfies `div B[r] = r` and
//! `B[r] . n = 0`, but not the full zero trace of the classical
//! construction; [`tangential_trace`] reports how far off it is.

use crate::error::{Error, Result};
use crate::field::{gradient, grad_seminorm, lp_norm, Exponent, ScalarField, VectorField};
use crate::helmholtz::{neumann_poisson_solve, NeumannFlux};

pub fn bogovskii(r: &ScalarField) -> Result<VectorField> {
    let integral = r.integral();
    if integral.abs() > 1e-10 * r.abs_integral() {
        return Err(Error::NotMeanZero { integral });
    }
    let phi = neumann_poisson_solve(r, &NeumannFlux::zero(r.grid))?;
    Ok(gradient(&phi))
}

/// `||grad B[r]||_2 / ||r||_2`, a sample of the discrete stability constant.
pub fn bogovskii_bound_check(r: &ScalarField) -> Result<f64> {
    let rn = lp_norm(r, Exponent::TWO);
    if rn == 0.0 {
        return Err(Error::ZeroInput);
    }
    let b = bogovskii(r)?;
    Ok(grad_seminorm(&b, Exponent::TWO) / rn)
}

/// Wall-restricted L2 norm of the tangential component of `v`, sampled on
/// the face rows and columns adjacent to each wall.
pub fn tangential_trace(v: &VectorField) -> f64 {
    let g = v.grid;
    let mut acc = 0.0;
    for i in 0..=g.nx {
        let w = g.xface_weight(i) * g.hx();
        acc += w * (v.x_at(i, 0).powi(2) + v.x_at(i, g.ny - 1).powi(2));
    }
    if !g.periodic() {
        for j in 0..=g.ny {
            let w = g.yface_weight(j) * g.hy();
            acc += w * (v.y_at(0, j).powi(2) + v.y_at(g.nx - 1, j).powi(2));
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{divergence, random, GridSpec};
    use std::f64::consts::PI;

    #[test]
    fn zero_in_zero_out() {
        let g = GridSpec::unit_square(8);
        assert_eq!(bogovskii(&ScalarField::zeros(g)).unwrap().max_abs(), 0.0);
        assert!(matches!(bogovskii_bound_check(&ScalarField::zeros(g)), Err(Error::ZeroInput)));
    }

    #[test]
    fn rejects_nonzero_mean() {
        let g = GridSpec::unit_square(8);
        assert!(matches!(bogovskii(&ScalarField::constant(g, 1.0)), Err(Error::NotMeanZero { .. })));
    }

    #[test]
    fn cosine_mode() {
        let g = GridSpec::unit_square(64);
        let r = ScalarField::from_fn(g, |x, _| (PI * x).cos());
        let b = bogovskii(&r).unwrap();
        // Continuous answer: grad of -(cos(pi x))/pi^2 = (sin(pi x)/pi, 0).
        let exact = VectorField::from_fn(g, |x, _| (PI * x).sin() / PI, |_, _| 0.0);
        assert!(lp_norm(&b.sub(&exact), Exponent::INF) < 1e-3);
        assert!(lp_norm(&divergence(&b).sub(&r), Exponent::TWO) < 1e-10);
        let ratio = bogovskii_bound_check(&r).unwrap();
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
        let ratio2 = bogovskii_bound_check(&r.scaled(2.0)).unwrap();
        assert!((ratio - ratio2).abs() < 1e-12);
    }

    #[test]
    fn random_round_trip() {
        let g = GridSpec::unit_square(24);
        let mut rng = random::rng(2);
        let r = crate::field::mean_zero_project(&random::random_scalar(g, &mut rng));
        let b = bogovskii(&r).unwrap();
        assert!(b.is_wall_compatible());
        assert!(lp_norm(&divergence(&b).sub(&r), Exponent::TWO) <= 1e-10 * lp_norm(&r, Exponent::TWO));
        assert!(tangential_trace(&b) > 0.0);
    }
}
