use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mapmesh_bench::city;
use mapmesh_core::graph::{build_graph, mst, path_tree, PathMetric};
use mapmesh_core::BuildingId;

fn graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_graph");
    for n in [500, 2000] {
        let map = city(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &map, |b, map| b.iter(|| build_graph(black_box(map), 100.0)));
    }
    group.finish();

    let g = build_graph(&city(2000), 100.0);
    c.bench_function("mst/2000", |b| b.iter(|| mst(black_box(&g))));
    let mut group = c.benchmark_group("path_tree/2000");
    for metric in [PathMetric::Minimax, PathMetric::Power(1.0), PathMetric::Power(10.0)] {
        group.bench_with_input(BenchmarkId::from_parameter(metric), &metric, |b, &m| {
            b.iter(|| path_tree(black_box(&g), BuildingId(0), m))
        });
    }
    group.finish();
}

criterion_group!(benches, graph);
criterion_main!(benches);
