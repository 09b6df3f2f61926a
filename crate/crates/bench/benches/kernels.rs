//! Hot-path timings: the divergence kernels, full pairwise matrices, and a
//! complete k-means fit on a realistically sized synthetic month set.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use edclust_core::dissim::{expert_deviation, kls_divergence, l2_distance, pairwise_ed, pairwise_l2};
use edclust_core::eval::synthetic::{generate, Regime, SyntheticSpec};
use edclust_core::grid::{FieldStack, GridGeometry, ZonePartition};
use edclust_core::quantize::{signatures, BinEdges, DaySignature, Histogram};
use edclust_core::{kmeans_fit, KMeansConfig, SignatureSpace};

const EPSILON: f64 = 1e-9;

/// Three planted regimes, `days` days total, on a 40x40 quadrant grid.
fn synthetic_days(days: usize, seed: u64) -> (FieldStack, Vec<DaySignature>) {
    let geometry = GridGeometry::index_grid(40, 40).unwrap();
    let partition = ZonePartition::quadrants(&geometry).unwrap();
    let edges = BinEdges::rainfall_table1();
    let bins = edges.bin_count();
    let mix = |peak: usize| {
        let mut m = vec![0.05; bins];
        m[peak] = 1.0;
        m
    };
    let regimes = vec![
        Regime::ZoneMix(vec![mix(0); 4]),
        Regime::ZoneMix(vec![mix(6), mix(0), mix(0), mix(0)]),
        Regime::ZoneMix(vec![mix(3); 4]),
    ];
    let spec = SyntheticSpec::new(geometry, partition, edges, regimes, days / 3, seed);
    let (stack, _) = generate(&spec).unwrap();
    let sigs = signatures(&stack, &spec.partition, &spec.edges, EPSILON).unwrap();
    (stack, sigs)
}

fn bench_divergence_kernels(c: &mut Criterion) {
    let p = Histogram::from_probs(
        vec![0.30, 0.20, 0.15, 0.10, 0.08, 0.07, 0.05, 0.03, 0.02],
        400,
    );
    let q = Histogram::from_probs(
        vec![0.02, 0.03, 0.05, 0.07, 0.08, 0.10, 0.15, 0.20, 0.30],
        400,
    );
    c.bench_function("kls_divergence/9_bins", |b| {
        b.iter(|| kls_divergence(black_box(&p), black_box(&q)).unwrap())
    });

    let (stack, sigs) = synthetic_days(6, 1);
    c.bench_function("expert_deviation/4_zones_9_bins", |b| {
        b.iter(|| expert_deviation(black_box(&sigs[0]), black_box(&sigs[5])).unwrap())
    });
    c.bench_function("l2_distance/40x40", |b| {
        b.iter(|| l2_distance(black_box(stack.day(0)), black_box(stack.day(5))).unwrap())
    });
}

fn bench_pairwise_matrices(c: &mut Criterion) {
    let (stack, sigs) = synthetic_days(99, 2);
    c.bench_function("pairwise_ed/99_days", |b| {
        b.iter(|| pairwise_ed(black_box(&sigs)).unwrap())
    });
    let mut group = c.benchmark_group("pairwise_l2");
    group.sample_size(20);
    group.bench_function("99_days_40x40", |b| {
        b.iter(|| pairwise_l2(black_box(stack.days())).unwrap())
    });
    group.finish();
}

fn bench_kmeans_fit(c: &mut Criterion) {
    let (_, sigs) = synthetic_days(99, 3);
    let space = SignatureSpace::new(EPSILON);
    let cfg = KMeansConfig {
        k: 3,
        seed: 0,
        max_iter: 50,
        restarts: 2,
    };
    let mut group = c.benchmark_group("kmeans");
    group.sample_size(10);
    group.bench_function("ed/99_days_k3_2_restarts", |b| {
        b.iter(|| kmeans_fit(&space, black_box(&sigs), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_divergence_kernels,
    bench_pairwise_matrices,
    bench_kmeans_fit
);
criterion_main!(benches);
