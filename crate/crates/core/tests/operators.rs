use std::f64::consts::PI;

use heavyflow::field::{
    divergence, gradient, inner, lp_norm, mean_zero_project, node_vorticity, random, sym_grad, Exponent, GridSpec,
    ScalarField, VectorField,
};
use heavyflow::helmholtz::{gradient_with_flux, project, NeumannFlux};
use heavyflow::inverse_div::bogovskii;
use proptest::prelude::*;

const L2: Exponent = Exponent::TWO;

fn grid() -> GridSpec {
    GridSpec::unit_square(32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn summation_by_parts(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let v = random::random_wall_compatible(grid(), &mut rng);
        let s = random::random_scalar(grid(), &mut rng);
        let (dv, gs) = (divergence(&v), gradient(&s));
        let scale = lp_norm(&dv, L2) * lp_norm(&s, L2) + lp_norm(&v, L2) * lp_norm(&gs, L2);
        prop_assert!((inner(&dv, &s) + inner(&v, &gs)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn helmholtz_round_trip(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let v = random::random_vector(grid(), &mut rng);
        let sp = project(&v).unwrap();
        let n = lp_norm(&v, L2);
        let pg = gradient_with_flux(&sp.potential, &NeumannFlux::from_normal_trace(&v));
        prop_assert!(lp_norm(&sp.solenoidal.add(&pg).sub(&v), L2) <= 1e-10 * n);
        prop_assert!(lp_norm(&divergence(&sp.solenoidal), L2) * grid().hx() <= 1e-10 * n);
        prop_assert!(inner(&sp.solenoidal, &pg).abs() <= 1e-10 * n * n);
    }

    #[test]
    fn bogovskii_right_inverse(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let r = mean_zero_project(&random::random_scalar(grid(), &mut rng));
        let b = bogovskii(&r).unwrap();
        prop_assert!(lp_norm(&divergence(&b).sub(&r), L2) <= 1e-10 * lp_norm(&r, L2));
        prop_assert!(b.is_wall_compatible());
    }

    #[test]
    fn divergence_is_linear(seed in any::<u64>(), a in -3.0f64..3.0) {
        let mut rng = random::rng(seed);
        let v = random::random_vector(grid(), &mut rng);
        let w = random::random_vector(grid(), &mut rng);
        let lhs = divergence(&v.axpy(a, &w));
        let rhs = divergence(&v).axpy(a, &divergence(&w));
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12 * (1.0 + lhs.max_abs()));
    }
}

fn phi_x(x: f64, y: f64) -> f64 {
    -PI * (PI * x).sin() * (2.0 * PI * y).cos() + 2.0 * PI * (2.0 * PI * x).cos() * y * y
}

fn phi_y(x: f64, y: f64) -> f64 {
    -2.0 * PI * (PI * x).cos() * (2.0 * PI * y).sin() + 2.0 * (2.0 * PI * x).sin() * y
}

/// Interior curl of the exactly sampled gradient of a smooth potential.
fn curl_grad_error(n: usize) -> f64 {
    let g = GridSpec::unit_square(n);
    let w = node_vorticity(&VectorField::from_fn(g, phi_x, phi_y));
    (1..g.ny).flat_map(|j| (1..g.nx).map(move |i| (i, j))).fold(0.0f64, |a, (i, j)| a.max(w.at(i, j).abs()))
}

fn ux(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).cos() + x * x * y
}

fn uy(x: f64, y: f64) -> f64 {
    (2.0 * PI * x).cos() * (PI * y).sin() - x * y * y * y
}

fn div_exact(x: f64, y: f64) -> f64 {
    PI * (PI * x).cos() * (PI * y).cos() + 2.0 * x * y + PI * (2.0 * PI * x).cos() * (PI * y).cos() - 3.0 * x * y * y
}

/// `trace D(u) - div u` against the exact divergence at cell centers.
fn trace_error(n: usize) -> f64 {
    let g = GridSpec::unit_square(n);
    let d = sym_grad(&VectorField::from_fn(g, ux, uy));
    let exact = ScalarField::from_fn(g, div_exact);
    (0..g.n_cells()).fold(0.0f64, |a, c| a.max((d.xx[c] + d.yy[c] - exact.values[c]).abs()))
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn curl_of_gradient_is_second_order() {
    let e: Vec<f64> = [32, 64, 128].iter().map(|&n| curl_grad_error(n)).collect();
    for p in orders(&e) {
        assert!(p >= 1.8, "errors {e:?}");
    }
}

#[test]
fn trace_of_strain_is_second_order() {
    let e: Vec<f64> = [32, 64, 128].iter().map(|&n| trace_error(n)).collect();
    for p in orders(&e) {
        assert!(p >= 1.8, "errors {e:?}");
    }
}

#[test]
fn discrete_identities_hold_exactly() {
    let mut rng = random::rng(3);
    for n in [32, 64, 128] {
        let g = GridSpec::unit_square(n);
        let s = random::random_scalar(g, &mut rng);
        let gs = gradient(&s);
        let w = node_vorticity(&gs);
        let worst = (1..g.ny)
            .flat_map(|j| (1..g.nx).map(move |i| (i, j)))
            .fold(0.0f64, |a, (i, j)| a.max(w.at(i, j).abs()));
        assert!(worst <= 1e-12 * gs.max_abs() / g.hx());

        let v = random::random_vector(g, &mut rng);
        let d = sym_grad(&v);
        let div = divergence(&v);
        assert!((0..g.n_cells()).all(|c| d.xx[c] + d.yy[c] == div.values[c]));
    }
}
