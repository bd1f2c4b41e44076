//! Parallel versus sequential throughput of the Monte-Carlo harness, plus
//! the hot inner kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use chaingauss::faithfulness::{random_cg, run_harness, run_harness_serial};
use chaingauss::gaussian::build_joint;
use chaingauss::params::{sample, SampleConfig};

fn bench_harness(c: &mut Criterion) {
    // Two sample grains: on the small graph each sample costs tens of
    // microseconds and pool overhead dominates; the 7-vertex graph has
    // 672 triples per sample and is where fan-out pays.
    for (label, n, samples) in [("5v", 5usize, 100usize), ("7v", 7, 20)] {
        let graph = random_cg(n, 0.6, 42);
        let mut group = c.benchmark_group(format!("faithfulness_harness_{label}"));
        group.sample_size(10);
        group.bench_function("run_harness", |b| {
            b.iter(|| run_harness(black_box(&graph), samples, 7, 1e-7).unwrap())
        });
        group.bench_function("run_harness_serial", |b| {
            b.iter(|| run_harness_serial(black_box(&graph), samples, 7, 1e-7).unwrap())
        });
        group.finish();
    }
}

fn bench_build_joint(c: &mut Criterion) {
    let graph = random_cg(6, 0.6, 9);
    let params = sample(&graph, 3, &SampleConfig::default());
    c.bench_function("build_joint_6v", |b| {
        b.iter(|| build_joint(black_box(&graph), black_box(&params)).unwrap())
    });
}

criterion_group!(benches, bench_harness, bench_build_joint);
criterion_main!(benches);
