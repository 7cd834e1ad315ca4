use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use reflang::experiments::{
    run_excursions, run_exit_law, run_scaling, ExcursionParams, ExitLawParams, ScalingParams,
};
use reflang::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn exit_law(c: &mut Criterion) {
    let mut g = c.benchmark_group("exit_law_2000_walks");
    g.sample_size(10);
    let p = ExitLawParams { replicas: 2000, ..ExitLawParams::default() };
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_exit_law(&p, exec).unwrap().p_above)
        });
    }
    g.finish();
}

fn excursions(c: &mut Criterion) {
    let mut g = c.benchmark_group("excursions_8x1e5_transitions");
    g.sample_size(10);
    let p = ExcursionParams { steps: 100_000, replicas: 8, ..ExcursionParams::default() };
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_excursions(&p, exec).unwrap().excursions.len())
        });
    }
    g.finish();
}

fn reflected_marginals(c: &mut Criterion) {
    let mut g = c.benchmark_group("scaling_1000_marginals");
    g.sample_size(10);
    let p = ScalingParams {
        replicas: 1000,
        steps: 1000,
        dt: 1e-3,
        stopped_replicas: 100,
        stopped_ks_samples: 100,
        stopped_dt: 1e-2,
        ..ScalingParams::default()
    };
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_scaling(&p, exec).unwrap().x_t.len())
        });
    }
    g.finish();
}

criterion_group!(benches, exit_law, excursions, reflected_marginals);
criterion_main!(benches);
