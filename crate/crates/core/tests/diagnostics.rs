use heavyflow::diagnostics::{
    fit_loglog, incompressible_reference_solve, low_mach_consistency, probes, run_study, xi, StudyConfig, StudyKind,
    Verdict,
};
use heavyflow::field::{divergence, gradient, lp_norm, random, sobolev_norm, Exponent, GridSpec, ScalarField, VectorField};
use heavyflow::forcing::{preset_force, ForcePreset};
use heavyflow::iteration::{outer_loop, Certificates, IterationState, LoopOptions};
use heavyflow::model::ModelParams;
use proptest::prelude::*;

fn state(r: ScalarField, u: VectorField, params: &ModelParams) -> IterationState {
    let certificates = Certificates::measure(&r, &u, params);
    IterationState { r, u, certificates }
}

#[test]
fn xi_of_simple_states() {
    let g = GridSpec::unit_square(16);
    let params = ModelParams::new(100.0, 2.0, 1.0, 4.0, VectorField::zeros(g)).unwrap();
    assert_eq!(xi(&state(ScalarField::zeros(g), VectorField::zeros(g), &params), &params), 0.0);
    let u = random::smooth_wall_compatible(g, &mut random::rng(5), 2, 1.0);
    let c = sobolev_norm(&u, 2, Exponent::Finite(4.0)).unwrap();
    let x = xi(&state(ScalarField::zeros(g), u.clone(), &params), &params);
    assert!((x - c).abs() <= 1e-12 * c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn xi_is_homogeneous_in_u(seed in any::<u64>(), s in 0.01f64..100.0) {
        let g = GridSpec::unit_square(16);
        let params = ModelParams::new(100.0, 2.0, 1.0, 4.0, VectorField::zeros(g)).unwrap();
        let u = random::smooth_wall_compatible(g, &mut random::rng(seed), 2, 1.0);
        let a = xi(&state(ScalarField::zeros(g), u.clone(), &params), &params);
        let b = xi(&state(ScalarField::zeros(g), u.scaled(s), &params), &params);
        prop_assert!((b - s * a).abs() <= 1e-10 * s * a);
    }

    #[test]
    fn loglog_fit_recovers_power_laws(c in 0.1f64..10.0, k in -3.0f64..3.0) {
        let x: Vec<f64> = (0..5).map(|i| 10f64.powf(2.0 + 0.5 * i as f64)).collect();
        let y: Vec<f64> = x.iter().map(|m| c * m.powf(k)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        prop_assert!((f.slope - k).abs() <= 1e-10);
        prop_assert!(f.half_width <= 1e-8);
    }
}

#[test]
fn reference_limits() {
    let g = GridSpec::unit_square(32);
    let zero = incompressible_reference_solve(&VectorField::zeros(g), 0.0).unwrap();
    assert_eq!(zero.u.max_abs(), 0.0);

    let s = ScalarField::from_fn(g, |x, y| (3.0 * x).cos() * (2.0 * y).sin());
    let grad = incompressible_reference_solve(&gradient(&s).with_walls_zeroed(), 0.0).unwrap();
    assert!(grad.u.max_abs() <= 1e-10 * gradient(&s).max_abs());

    let f = preset_force(g, ForcePreset::Vortex, 1.0, 4.0).unwrap();
    let vortex = incompressible_reference_solve(&f, 1.0).unwrap();
    assert!(vortex.u.max_abs() > 1e-3);
    assert!(vortex.divergence <= 1e-10);
    assert!(lp_norm(&divergence(&vortex.u), Exponent::TWO) <= 1e-10 * lp_norm(&vortex.u, Exponent::TWO) / g.hx());
}

#[test]
fn low_mach_with_zero_force_is_identically_zero() {
    let g = GridSpec::unit_square(16);
    let cfg = StudyConfig::new(VectorField::zeros(g), 2.0, vec![1e2, 1e3, 1e4]);
    let rep = low_mach_consistency(&cfg).unwrap();
    let lm = rep.low_mach.unwrap();
    assert!(lm.distances.iter().all(|&d| d == 0.0));
    assert!(lm.pass);
}

#[test]
fn low_mach_flags_subquadratic_gamma() {
    let g = GridSpec::unit_square(16);
    let f = preset_force(g, ForcePreset::Vortex, 1.0, 4.0).unwrap();
    let rep = low_mach_consistency(&StudyConfig::new(f, 1.5, vec![1e2, 1e3, 1e4])).unwrap();
    assert!(rep.low_mach.unwrap().flag.unwrap().contains("limit structure differs"));
}

#[test]
fn rows_carry_fingerprints_and_failures_void_fits() {
    let g = GridSpec::unit_square(16);
    let f = preset_force(g, ForcePreset::Vortex, 1.0, 4.0).unwrap();
    let mut cfg = StudyConfig::new(f, 2.0, vec![1e2, 1e3, 1e4]);
    let good = run_study(&cfg, StudyKind::Divergence).unwrap();
    assert!(good.rows.iter().all(|r| r.params_fingerprint.len() == 16 && r.grid_hash.len() == 16));
    assert_ne!(good.rows[0].params_fingerprint, good.rows[1].params_fingerprint);
    assert_eq!(good.rows[0].grid_hash, good.rows[1].grid_hash);

    cfg.loop_options = LoopOptions { max_outer: 1, ..LoopOptions::default() };
    let partial = run_study(&cfg, StudyKind::Divergence).unwrap();
    assert_eq!(partial.rows.len(), 3);
    assert!(!partial.all_converged());
    assert_eq!(partial.fit("div_lp").unwrap().verdict, Verdict::Void);
}

/// Contraction ratios at fixed `m` barely move under refinement.
#[test]
fn ratios_are_grid_independent() {
    let mut ratios = Vec::new();
    for n in [64, 128] {
        let g = GridSpec::unit_square(n);
        let f = preset_force(g, ForcePreset::Vortex, 1.0, 4.0).unwrap();
        let params = ModelParams::new(1e3, 2.0, 1.0, 4.0, f).unwrap();
        let opts = LoopOptions::default();
        let out = outer_loop(&params, &opts).unwrap().into_result().unwrap();
        ratios.push(probes(&out.state.r, &out.state.u, &params, &opts).unwrap());
    }
    let (inner64, density64) = ratios[0];
    let (inner128, density128) = ratios[1];
    assert!((inner128 / inner64 - 1.0).abs() <= 0.2, "inner {inner64:e} vs {inner128:e}");
    assert!((density128 / density64 - 1.0).abs() <= 0.2, "density {density64:e} vs {density128:e}");
}
