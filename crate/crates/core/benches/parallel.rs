//! Sequential versus rayon execution of the batch-parallel parts of the
//! solver. Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cvop_core::algorithm::{run, RunConfig};
use cvop_core::geometry::Halfspace;
use cvop_core::parallel::Parallelism;
use cvop_core::problem::builtin;
use cvop_core::vertex_enum::{brute_vertices, EnumTolerances};

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("rayon", Parallelism::Rayon),
];

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for (name, eps) in [("example1_q3", 0.01), ("example2", 0.02)] {
        let inst = builtin(name).unwrap();
        for (label, mode) in MODES {
            let cfg = RunConfig {
                parallelism: mode,
                ..RunConfig::new(eps)
            };
            group.bench_with_input(BenchmarkId::new(label, name), &cfg, |b, cfg| {
                b.iter(|| run(black_box(&inst), cfg).unwrap())
            });
        }
    }
    group.finish();
}

/// Outer polytope of a finished run: enough rows for subset enumeration to
/// dominate.
fn brute_force(c: &mut Criterion) {
    let inst = builtin("example1_q3").unwrap();
    let res = run(&inst, &RunConfig::new(0.05)).unwrap();
    let rows: Vec<Halfspace> = res.outer.halfspaces().to_vec();
    let mut group = c.benchmark_group("brute_vertices");
    group.sample_size(10);
    for (label, mode) in MODES {
        group.bench_with_input(BenchmarkId::new(label, rows.len()), &rows, |b, rows| {
            b.iter(|| brute_vertices(3, black_box(rows), EnumTolerances::default(), mode))
        });
    }
    group.finish();
}

criterion_group!(benches, solve, brute_force);
criterion_main!(benches);
