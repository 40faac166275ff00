use agentflow::fit::fit_least_squares_with;
use agentflow::{collect_histogram, simulate_ensemble, simulate_flow, Execution, Metric, ModelParams, ResponseCurve};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn ensemble(c: &mut Criterion) {
    let params = ModelParams::reference();
    let mut group = c.benchmark_group("simulate_ensemble");
    group.sample_size(10);
    for n in [10_000usize, 100_000] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| simulate_ensemble(&params, n, 1, exec))
            });
        }
    }
    group.finish();
}

fn least_squares(c: &mut Criterion) {
    let outcomes = simulate_ensemble(&ModelParams::reference(), 100_000, 1, Execution::Parallel);
    let hist = collect_histogram(&outcomes, Metric::Likes).unwrap();
    let mut group = c.benchmark_group("fit_least_squares");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| fit_least_squares_with(&hist, exec).unwrap()));
    }
    group.finish();
}

fn flow(c: &mut Criterion) {
    let mut params = ModelParams::reference();
    params.p_s = 0.05;
    params.phi = ResponseCurve::saturating(3.0).unwrap();
    let mut group = c.benchmark_group("simulate_flow");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| simulate_flow(&params, 500, 1, 100_000, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble, least_squares, flow);
criterion_main!(benches);
