use heavyflow::field::{random, GridSpec};
use heavyflow::linsolve::manufactured::{random_problem, ProblemShape};
use heavyflow::linsolve::{energy_balance, h1_norm, l2_norm, residuals, solve_decomposed, solve_monolithic};
use proptest::prelude::*;

#[test]
fn twenty_manufactured_problems() {
    let g = GridSpec::unit_square(32);
    let mut rng = random::rng(41);
    let shape = ProblemShape { m: 1e3, gamma: 2.0, ..ProblemShape::default() };
    for k in 0..20 {
        let man = random_problem(g, shape, &mut rng).unwrap();
        let mono = solve_monolithic(&man.problem).unwrap();
        let eu = h1_norm(&mono.u.sub(&man.u)) / h1_norm(&man.u);
        let er = l2_norm(&mono.r.sub(&man.r)) / l2_norm(&man.r);
        assert!(eu <= 1e-8 && er <= 1e-8, "problem {k}: u {eu:e}, r {er:e}");

        let dec = solve_decomposed(&man.problem).unwrap();
        let du = h1_norm(&dec.u.sub(&mono.u)) / h1_norm(&mono.u);
        let dr = l2_norm(&dec.r.sub(&mono.r)) / l2_norm(&mono.r);
        assert!(du <= 1e-6 && dr <= 1e-6, "problem {k}: u {du:e}, r {dr:e}");
        let trace = dec.flux_trace.as_ref().expect("decomposed solves carry a trace");
        assert!(trace.consistency <= 1e-6, "problem {k}: flux identity {:e}", trace.consistency);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solutions_satisfy_the_energy_identity(seed in any::<u64>(), lm in 2.0f64..4.0, gamma in 1.2f64..3.0) {
        let g = GridSpec::unit_square(16);
        let mut rng = random::rng(seed);
        let shape = ProblemShape { m: 10f64.powf(lm), gamma, ..ProblemShape::default() };
        let man = random_problem(g, shape, &mut rng).unwrap();
        let sol = solve_monolithic(&man.problem).unwrap();
        prop_assert!(residuals(&man.problem, &sol.r, &sol.u).max() <= 1e-10);
        prop_assert!(energy_balance(&man.problem, &sol.r, &sol.u).defect() <= 1e-9);
        prop_assert!(sol.r.integral().abs() <= 1e-12 * sol.r.abs_integral().max(1e-300));
    }
}
