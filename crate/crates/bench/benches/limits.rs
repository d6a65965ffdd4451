use criterion::{criterion_group, criterion_main, Criterion};
use rcm_core::{estimate_component_limit, estimate_h_a, estimate_sigma_ab, ConnectionFunction, PatternGraph};

fn limits(c: &mut Criterion) {
    let phi = ConnectionFunction::gaussian(2, 1.0).unwrap();
    let k3: PatternGraph = "K3".parse().unwrap();
    let p3: PatternGraph = "P3".parse().unwrap();
    let mut group = c.benchmark_group("limits");
    group.sample_size(10);
    group.bench_function("h_a/K3/10k", |b| b.iter(|| estimate_h_a(&phi, 1.0, &k3, 10_000, 1).unwrap()));
    group.bench_function("sigma_ab/K3,P3/10k", |b| {
        b.iter(|| estimate_sigma_ab(&k3, &p3, &phi, 1.0, 10_000, 1).unwrap())
    });
    group.bench_function("component_limit/P3/1k", |b| {
        b.iter(|| estimate_component_limit(&p3, &phi, 1.0, 1_000, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, limits);
criterion_main!(benches);
