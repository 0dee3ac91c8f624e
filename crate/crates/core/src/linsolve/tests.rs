use super::manufactured::{random_problem, ProblemShape};
use super::*;
use crate::field::{gradient, node_vorticity, random, NodeField};

fn grid() -> GridSpec {
    GridSpec::unit_square(24)
}

fn rel_diff_u(a: &VectorField, b: &VectorField) -> f64 {
    h1_norm(&a.sub(b)) / h1_norm(b)
}

fn rel_diff_r(a: &ScalarField, b: &ScalarField) -> f64 {
    l2_norm(&a.sub(b)) / l2_norm(b)
}

#[test]
fn zero_data_zero_solution() {
    let g = grid();
    let params = ModelParams::new(100.0, 2.0, 1.0, 4.0, VectorField::zeros(g)).unwrap();
    let prob = LinearizedProblem::stokes(params, VectorField::zeros(g), WallTraction::zeros(g));
    let s = solve_monolithic(&prob).unwrap();
    assert_eq!(s.u.max_abs(), 0.0);
    assert_eq!(s.r.max_abs(), 0.0);
    let d = solve_decomposed(&prob).unwrap();
    assert_eq!(d.u.max_abs(), 0.0);
    assert_eq!(d.flux_trace.unwrap().p_flux.max_abs(), 0.0);
}

#[test]
fn manufactured_recovery() {
    let mut rng = random::rng(7);
    let man = random_problem(grid(), ProblemShape::default(), &mut rng).unwrap();
    let s = solve_monolithic(&man.problem).unwrap();
    assert!(rel_diff_u(&s.u, &man.u) < 1e-8, "{}", rel_diff_u(&s.u, &man.u));
    assert!(rel_diff_r(&s.r, &man.r) < 1e-8, "{}", rel_diff_r(&s.r, &man.r));
    assert!(s.residuals.max() < 1e-12, "{:?}", s.residuals);
    assert!(s.r.integral().abs() <= 1e-12 * s.r.abs_integral());
}

#[test]
fn decomposed_matches_monolithic() {
    let mut rng = random::rng(11);
    let man = random_problem(grid(), ProblemShape::default(), &mut rng).unwrap();
    let mono = solve_monolithic(&man.problem).unwrap();
    let dec = solve_decomposed(&man.problem).unwrap();
    assert!(rel_diff_u(&dec.u, &mono.u) < 1e-6);
    assert!(rel_diff_r(&dec.r, &mono.r) < 1e-6);
    let trace = dec.flux_trace.unwrap();
    assert!(trace.consistency < 1e-6, "{}", trace.consistency);
    assert!(trace.sweeps < 200);
}

#[test]
fn decomposed_rejects_large_transport() {
    let mut rng = random::rng(3);
    let shape = ProblemShape { m: 2.0, density: 0.1, ..ProblemShape::default() };
    let man = random_problem(grid(), shape, &mut rng).unwrap();
    assert!(matches!(solve_decomposed(&man.problem), Err(Error::Admissibility(_))));
}

#[test]
fn energy_identity_closes() {
    let mut rng = random::rng(5);
    let man = random_problem(grid(), ProblemShape::default(), &mut rng).unwrap();
    let s = solve_monolithic(&man.problem).unwrap();
    let e = energy_balance(&man.problem, &s.r, &s.u);
    assert!(e.defect() < 1e-9, "{e:?}");
    assert!(e.convection.abs() < 1e-12 * e.dissipation, "{e:?}");
    assert!(e.dissipation > 0.0 && e.friction > 0.0);
}

#[test]
fn solution_linear_in_data() {
    let mut rng = random::rng(9);
    let man = random_problem(grid(), ProblemShape::default(), &mut rng).unwrap();
    let mut p2 = man.problem.clone();
    p2.rhs_g = p2.rhs_g.scaled(-2.5);
    p2.rhs_h = p2.rhs_h.scaled(-2.5);
    let a = solve_monolithic(&man.problem).unwrap();
    let b = solve_monolithic(&p2).unwrap();
    assert!(rel_diff_u(&b.u, &a.u.scaled(-2.5)) < 1e-10);
}

#[test]
fn viscous_operator_matches_assembly() {
    let g = grid();
    let mut rng = random::rng(1);
    let u = random::smooth_wall_compatible(g, &mut rng, 3, 1.0);
    let (m, f) = (50.0, 3.0);
    let params = ModelParams::new(m, 2.0, f, 4.0, VectorField::zeros(g)).unwrap();
    let prob = LinearizedProblem::stokes(params, VectorField::zeros(g), WallTraction::zeros(g));
    let (_, force) = apply_linear(&prob, &ScalarField::zeros(g), &u);
    let v = viscous_operator(&ScalarField::constant(g, m), &u, &friction_stress(&u, f));
    assert!(force.sub(&v).max_abs() < 1e-10 * v.max_abs());
}

#[test]
fn viscous_split_into_vorticity_and_divergence() {
    // -div(2 D u) = curl omega - 2 grad div u, with wall omega from the stress.
    let g = grid();
    let mut rng = random::rng(4);
    let u = random::smooth_wall_compatible(g, &mut rng, 4, 1.0);
    let stress = friction_stress(&u, 0.7);
    let lhs = viscous_operator(&ScalarField::constant(g, 1.0), &u, &stress);
    let mut w: NodeField = node_vorticity(&u);
    for i in 1..g.nx {
        w.values[g.node(i, 0)] = -stress.bottom[i];
        w.values[g.node(i, g.ny)] = -stress.top[i];
    }
    for j in 1..g.ny {
        w.values[g.node(0, j)] = stress.left[j];
        w.values[g.node(g.nx, j)] = stress.right[j];
    }
    let rhs = crate::field::curl_of_stream(&w).sub(&gradient(&divergence(&u)).scaled(2.0)).with_walls_zeroed();
    assert!(lhs.sub(&rhs).max_abs() < 1e-9 * lhs.max_abs());
}

#[test]
fn convection_is_skew() {
    let g = grid();
    let mut rng = random::rng(8);
    let w = random::smooth_wall_compatible(g, &mut rng, 3, 1.0);
    let u = random::random_wall_compatible(g, &mut rng);
    let c = convection(&w, &u);
    let dot: f64 = c.xcomp.iter().zip(&u.xcomp).chain(c.ycomp.iter().zip(&u.ycomp)).map(|(a, b)| a * b).sum();
    assert!(dot.abs() < 1e-12 * c.max_abs() * u.max_abs() * g.n_xfaces() as f64);
}

#[test]
fn transport_without_velocity_is_rescaling() {
    let g = grid();
    let mut rng = random::rng(2);
    let p = random::smooth_mean_zero(g, &mut rng, 3);
    let params = ModelParams::new(300.0, 1.5, 1.0, 4.0, VectorField::zeros(g)).unwrap();
    let (r, rep) = transport_solve(&p, &VectorField::zeros(g), &params).unwrap();
    assert_eq!(r, p.scaled(1.0 / params.q_scale()));
    assert_eq!(rep.iterations, 1);
    let phi = potential_solve(&p, &r, &params).unwrap();
    assert!(phi.max_abs() < 1e-12 * p.max_abs());
}

#[test]
fn transport_iterations_drop_with_mass() {
    let g = grid();
    let mut rng = random::rng(6);
    let p = random::smooth_mean_zero(g, &mut rng, 3);
    let uf = random::smooth_wall_compatible(g, &mut rng, 3, 1.0);
    let mut last = usize::MAX;
    for m in [1e2, 2e2, 4e2, 8e2] {
        let params = ModelParams::new(m, 2.0, 1.0, 4.0, VectorField::zeros(g)).unwrap();
        let (_, rep) = transport_solve(&p, &uf, &params).unwrap();
        assert!(rep.residual < 1e-9);
        assert!(rep.iterations <= last);
        last = rep.iterations;
    }
}

#[test]
fn heavier_fluid_moves_less() {
    let g = grid();
    let mut rng = random::rng(12);
    let force = random::smooth_wall_compatible(g, &mut rng, 3, 1.0);
    let solve = |m: f64| {
        let params = ModelParams::new(m, 2.0, 1.0, 4.0, VectorField::zeros(g)).unwrap();
        let prob = LinearizedProblem::stokes(params, force.clone(), WallTraction::zeros(g));
        h1_norm(&solve_monolithic(&prob).unwrap().u)
    };
    assert!(solve(200.0) < solve(100.0));
}

#[test]
fn vorticity_of_gradient_force_vanishes() {
    let g = grid();
    let mut rng = random::rng(13);
    let s = random::smooth_mean_zero(g, &mut rng, 3);
    let params = ModelParams::new(100.0, 2.0, 0.0, 4.0, VectorField::zeros(g)).unwrap();
    let prob = LinearizedProblem::stokes(params, gradient(&s), WallTraction::zeros(g));
    let w = vorticity_solve(&prob, &VectorField::zeros(g)).unwrap();
    assert!(w.values.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn rejects_heavy_offset() {
    let mut rng = random::rng(14);
    let mut man = random_problem(grid(), ProblemShape::default(), &mut rng).unwrap();
    man.problem.density_offset = man.problem.density_offset.scaled(1e4);
    assert!(matches!(solve_monolithic(&man.problem), Err(Error::Invariant(_))));
}
