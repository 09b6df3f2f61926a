//! End-to-end library flows: synthetic stack -> signatures -> matrix ->
//! clustering -> evaluation, checked against planted ground truth.

use edclust_core::cluster::{kmeans_fit, Algorithm, ClusterSpace, KMeansConfig, SignatureSpace};
use edclust_core::dissim::{l2_distance, pairwise_ed};
use edclust_core::eval::synthetic::{generate, localized_vs_spread, Regime, SyntheticSpec};
use edclust_core::eval::{adjusted_rand_index, best_sweep_point, k_sweep, silhouette};
use edclust_core::grid::{GridGeometry, ZonePartition};
use edclust_core::quantize::{signatures, BinEdges};

const EPSILON: f64 = 1e-9;

/// Three regimes with distinct per-zone intensity mixes on quadrant zones.
fn three_regime_spec(seed: u64) -> SyntheticSpec {
    let geometry = GridGeometry::index_grid(20, 20).unwrap();
    let partition = ZonePartition::quadrants(&geometry).unwrap();
    let edges = BinEdges::rainfall_table1();
    let m = edges.bin_count();
    let peaked = |bin: usize| {
        let mut mix = vec![0.0; m];
        mix[bin] = 1.0;
        mix
    };
    let regimes = vec![
        // dry everywhere
        Regime::ZoneMix(vec![peaked(0), peaked(0), peaked(0), peaked(0)]),
        // heavy rain in the first zone only
        Regime::ZoneMix(vec![peaked(6), peaked(0), peaked(0), peaked(0)]),
        // moderate rain everywhere
        Regime::ZoneMix(vec![peaked(3), peaked(3), peaked(3), peaked(3)]),
    ];
    SyntheticSpec::new(geometry, partition, edges, regimes, 50, seed)
}

#[test]
fn three_planted_regimes_recovered_across_seeds() {
    let spec = three_regime_spec(400);
    let (stack, labels) = generate(&spec).unwrap();
    let sigs = signatures(&stack, &spec.partition, &spec.edges, EPSILON).unwrap();
    let space = SignatureSpace::new(EPSILON);
    let mut passes = 0;
    for seed in 0..10 {
        let result = kmeans_fit(&space, &sigs, &KMeansConfig::new(3, seed)).unwrap();
        let ari = adjusted_rand_index(&result.assignments, &labels).unwrap();
        if ari >= 0.9 {
            passes += 1;
        }
    }
    assert_eq!(passes, 10, "only {passes}/10 seeds recovered the regimes");
}

#[test]
fn single_cluster_centroid_is_the_signature_mean() {
    let spec = three_regime_spec(401);
    let (stack, _) = generate(&spec).unwrap();
    let sigs = signatures(&stack, &spec.partition, &spec.edges, EPSILON).unwrap();
    let space = SignatureSpace::new(EPSILON);
    let result = kmeans_fit(&space, &sigs, &KMeansConfig::new(1, 0)).unwrap();
    assert!(result.assignments.iter().all(|&a| a == 0));
    let all: Vec<usize> = (0..sigs.len()).collect();
    let expected = space.centroid(&sigs, &all).unwrap();
    for (got, want) in result.centroids[0]
        .zone_histograms()
        .iter()
        .zip(expected.zone_histograms())
    {
        for (g, w) in got.probs().iter().zip(want.probs()) {
            assert!((g - w).abs() < 1e-15);
        }
    }
    // centroid histograms are strictly positive and normalized
    for h in result.centroids[0].zone_histograms() {
        assert!(h.probs().iter().all(|&p| p > 0.0));
        assert!((h.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn sweep_singleton_range_equals_direct_silhouette() {
    let spec = three_regime_spec(402);
    let (stack, _) = generate(&spec).unwrap();
    let sigs = signatures(&stack, &spec.partition, &spec.edges, EPSILON).unwrap();
    let matrix = pairwise_ed(&sigs).unwrap();
    let space = SignatureSpace::new(EPSILON);
    let cfg = KMeansConfig::new(0, 8);
    let sweep = k_sweep(&space, &sigs, &matrix, Algorithm::Kms, 2, 2, &cfg).unwrap();
    assert_eq!(sweep.len(), 1);
    let fit = kmeans_fit(&space, &sigs, &KMeansConfig { k: 2, ..cfg }).unwrap();
    let direct = silhouette(&matrix, &fit.assignments).unwrap();
    assert_eq!(sweep[0].mean_silhouette.to_bits(), direct.mean.to_bits());

    // identical seeds give identical curves
    let again = k_sweep(&space, &sigs, &matrix, Algorithm::Kms, 2, 2, &cfg).unwrap();
    assert_eq!(
        sweep[0].mean_silhouette.to_bits(),
        again[0].mean_silhouette.to_bits()
    );
}

#[test]
fn sweep_peaks_at_the_planted_count() {
    let spec = three_regime_spec(403);
    let (stack, _) = generate(&spec).unwrap();
    let sigs = signatures(&stack, &spec.partition, &spec.edges, EPSILON).unwrap();
    let matrix = pairwise_ed(&sigs).unwrap();
    let space = SignatureSpace::new(EPSILON);
    let sweep = k_sweep(
        &space,
        &sigs,
        &matrix,
        Algorithm::Kms,
        2,
        6,
        &KMeansConfig::new(0, 21),
    )
    .unwrap();
    assert_eq!(best_sweep_point(&sweep).unwrap().k, 3);
}

#[test]
fn localized_vs_spread_triple_on_the_tall_grid() {
    // 101 x 189 cells, amplitude 10: both displaced fields sit exactly at
    // Euclidean distance 10 from the zero reference
    let geometry = GridGeometry::new(101, 189, 5.0, 30.0, -66.25, -19.25, 0.25).unwrap();
    let (reference, localized, spread) = localized_vs_spread(geometry, 10).unwrap();
    assert_eq!(l2_distance(&reference, &localized).unwrap(), 10.0);
    assert_eq!(l2_distance(&reference, &spread).unwrap(), 10.0);
}
