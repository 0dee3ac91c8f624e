use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use heavyflow::field::{random, GridSpec};
use heavyflow::forcing::{preset_force, ForcePreset};
use heavyflow::iteration::{outer_loop, LoopOptions};
use heavyflow::linsolve::manufactured::{random_problem, Manufactured, ProblemShape};
use heavyflow::linsolve::solve_monolithic;
use heavyflow::model::ModelParams;
use heavyflow::parallel::{map_collect, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn linear_solves(c: &mut Criterion) {
    let g = GridSpec::unit_square(32);
    let mut rng = random::rng(7);
    let problems: Vec<Manufactured> =
        (0..8).map(|_| random_problem(g, ProblemShape::default(), &mut rng).unwrap()).collect();

    let mut group = c.benchmark_group("linear_solves_32x32_x8");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| map_collect(exec, &problems, |p| solve_monolithic(&p.problem).unwrap().residuals.max()))
        });
    }
    group.finish();
}

fn mass_sweep(c: &mut Criterion) {
    let g = GridSpec::unit_square(24);
    let force = preset_force(g, ForcePreset::Vortex, 1.0, 4.0).unwrap();
    let params: Vec<ModelParams> = [1e2, 1e3, 1e4, 1e5]
        .iter()
        .map(|&m| ModelParams::new(m, 2.0, 1.0, 4.0, force.clone()).unwrap())
        .collect();
    let opts = LoopOptions::default();

    let mut group = c.benchmark_group("outer_loops_24x24_x4");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| map_collect(exec, &params, |p| outer_loop(p, &opts).unwrap().report.iterates))
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = linear_solves, mass_sweep
}
criterion_main!(benches);
