use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use noncoercive_bench::fixture;
use noncoercive_core::solvers::{
    solve_general, solve_model_both, solve_model_min, HChoice, SolverOptions,
};

fn pipeline(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for n in [33, 65] {
        let data = fixture(n);
        group.bench_with_input(BenchmarkId::new("solve_min", n), &n, |b, _| {
            b.iter(|| solve_model_min(&data, &opts).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("solve_both", n), &n, |b, _| {
            b.iter(|| solve_model_both(&data, &opts).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("solve_general", n), &n, |b, _| {
            b.iter(|| solve_general(&data, HChoice::Model, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
