use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rcm_core::topology::betti_of_graph;
use rcm_core::{
    build_graph_with, clique_complex, connected_components, count_induced_subgraphs, sample_poisson, Boundary,
    ConnectionFunction, Graph, PatternGraph, Window,
};

fn sample_graph(volume: f64, boundary: Boundary) -> Graph {
    let phi = ConnectionFunction::gaussian(2, 1.0).unwrap();
    let w = Window::centered(2, volume.sqrt()).unwrap();
    let config = sample_poisson(&w, 1.0, 17).unwrap();
    build_graph_with(&config, &phi, 18, boundary).unwrap()
}

fn build(c: &mut Criterion) {
    let phi = ConnectionFunction::gaussian(2, 1.0).unwrap();
    let mut group = c.benchmark_group("build_graph");
    for volume in [100.0, 400.0, 1600.0] {
        let w = Window::centered(2, f64::sqrt(volume)).unwrap();
        let config = sample_poisson(&w, 1.0, 17).unwrap();
        for boundary in [Boundary::Free, Boundary::Periodic] {
            group.bench_with_input(BenchmarkId::new(format!("{boundary:?}"), volume), &config, |b, config| {
                b.iter(|| build_graph_with(black_box(config), &phi, 18, boundary).unwrap())
            });
        }
    }
    group.finish();
}

fn functionals(c: &mut Criterion) {
    let g = sample_graph(1600.0, Boundary::Free);
    c.bench_function("components/1600", |b| b.iter(|| connected_components(black_box(&g))));
    for name in ["K3", "P3", "K4"] {
        let a: PatternGraph = name.parse().unwrap();
        c.bench_function(&format!("induced_count/{name}/1600"), |b| {
            b.iter(|| count_induced_subgraphs(black_box(&g), &a).unwrap())
        });
    }
}

fn topology(c: &mut Criterion) {
    let g = sample_graph(400.0, Boundary::Free);
    c.bench_function("clique_complex/400", |b| b.iter(|| clique_complex(black_box(&g), 3)));
    c.bench_function("betti_0_1/400", |b| b.iter(|| betti_of_graph(black_box(&g), 1).unwrap()));
}

criterion_group!(benches, build, functionals, topology);
criterion_main!(benches);
