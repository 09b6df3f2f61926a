//! Property tests for the structural guarantees the library leans on:
//! histogram totality and normalization, divergence axioms, matrix
//! symmetry, and lossless stack round-trips.

use proptest::prelude::*;

use edclust_core::dissim::{
    expert_deviation, kls_divergence, l2_distance, pairwise_l2, DissimilarityMatrix, Measure,
};
use edclust_core::eval::silhouette;
use edclust_core::grid::{GridField, GridGeometry, ZonePartition};
use edclust_core::quantize::{quantize, signature, BinEdges, DaySignature};
use edclust_core::stack_io::{load_stack, save_stack};
use edclust_core::FieldStack;

fn arb_edges() -> impl Strategy<Value = BinEdges> {
    (
        prop::collection::vec(0.001f64..100.0, 1..8),
        prop::bool::ANY,
    )
        .prop_map(|(mut raw, zero_bin)| {
            raw.sort_by(f64::total_cmp);
            raw.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            BinEdges::new("rainfall", zero_bin, raw).expect("sorted deduped edges are valid")
        })
}

fn arb_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..200.0, 0..80)
}

proptest! {
    #[test]
    fn every_value_lands_in_exactly_one_bin(edges in arb_edges(), values in arb_values()) {
        for v in values {
            let bin = edges.bin_index(v);
            prop_assert!(bin < edges.bin_count());
            let (lo, hi) = edges.bin_range(bin);
            if lo == hi {
                prop_assert!(v <= 0.0);
            } else {
                prop_assert!(v > lo || (bin == 0 && !edges.zero_bin()));
                prop_assert!(v <= hi);
            }
        }
    }

    #[test]
    fn histograms_are_positive_and_normalized(edges in arb_edges(), values in arb_values()) {
        let h = quantize(&values, &edges, 1e-9);
        prop_assert_eq!(h.n_bins(), edges.bin_count());
        let sum: f64 = h.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        let floor = 1e-9 / (1.0 + h.n_bins() as f64 * 1e-9);
        prop_assert!(h.probs().iter().all(|&p| p >= floor * (1.0 - 1e-12)));
    }

    #[test]
    fn quantization_ignores_value_order(edges in arb_edges(), values in arb_values()) {
        let mut reversed = values.clone();
        reversed.reverse();
        let a = quantize(&values, &edges, 1e-9);
        let b = quantize(&reversed, &edges, 1e-9);
        prop_assert_eq!(a.probs(), b.probs());
    }

    #[test]
    fn divergence_axioms_hold_for_smoothed_histograms(
        edges in arb_edges(),
        left in arb_values(),
        right in arb_values(),
    ) {
        let p = quantize(&left, &edges, 1e-9);
        let q = quantize(&right, &edges, 1e-9);
        let pq = kls_divergence(&p, &q).unwrap();
        let qp = kls_divergence(&q, &p).unwrap();
        prop_assert!(pq >= 0.0);
        prop_assert_eq!(pq.to_bits(), qp.to_bits());
        prop_assert_eq!(kls_divergence(&p, &p).unwrap(), 0.0);

        let a = DaySignature::new(vec![p.clone(), q.clone()], 0);
        let b = DaySignature::new(vec![q, p], 1);
        let ed = expert_deviation(&a, &b).unwrap();
        prop_assert!(ed >= 0.0);
        prop_assert_eq!(ed.to_bits(), expert_deviation(&b, &a).unwrap().to_bits());
        prop_assert_eq!(expert_deviation(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn condensed_matrix_is_symmetric_with_zero_diagonal(
        values in prop::collection::vec(0.0f64..50.0, 10)
    ) {
        let geom = GridGeometry::index_grid(1, 1).unwrap();
        let fields: Vec<GridField> = values
            .iter()
            .enumerate()
            .map(|(d, &v)| {
                GridField::new(
                    geom,
                    chrono::NaiveDate::from_ymd_opt(2000, 1, 1)
                        .unwrap()
                        .checked_add_days(chrono::Days::new(d as u64))
                        .unwrap(),
                    vec![v as f32],
                )
                .unwrap()
            })
            .collect();
        let m = pairwise_l2(&fields).unwrap();
        for i in 0..10 {
            prop_assert_eq!(m.get(i, i), 0.0);
            for j in 0..10 {
                prop_assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn matrix_file_round_trip_is_exact(
        raw in prop::collection::vec(0.0f64..1e6, 15), // n = 6
    ) {
        let m = DissimilarityMatrix::from_condensed(6, Measure::Ed, raw).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("triangle.edm");
        m.save(&path).unwrap();
        let back = DissimilarityMatrix::load(&path).unwrap();
        prop_assert_eq!(m.values(), back.values());
        prop_assert_eq!(back.measure(), Measure::Ed);
    }

    #[test]
    fn l2_satisfies_the_triangle_inequality(
        a in prop::collection::vec(-50.0f32..50.0, 9),
        b in prop::collection::vec(-50.0f32..50.0, 9),
        c in prop::collection::vec(-50.0f32..50.0, 9),
    ) {
        let geom = GridGeometry::index_grid(3, 3).unwrap();
        let date = |d: u32| chrono::NaiveDate::from_ymd_opt(2000, 1, d).unwrap();
        let fa = GridField::new(geom, date(1), a).unwrap();
        let fb = GridField::new(geom, date(2), b).unwrap();
        let fc = GridField::new(geom, date(3), c).unwrap();
        let ab = l2_distance(&fa, &fb).unwrap();
        let bc = l2_distance(&fb, &fc).unwrap();
        let ac = l2_distance(&fa, &fc).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn ed_ignores_intra_zone_rearrangement(
        values in prop::collection::vec(0.0f32..80.0, 64),
        rotation in 1usize..15,
    ) {
        let geom = GridGeometry::index_grid(8, 8).unwrap();
        let partition = ZonePartition::quadrants(&geom).unwrap();
        let edges = BinEdges::rainfall_table1();
        let date = |d: u32| chrono::NaiveDate::from_ymd_opt(2000, 1, d).unwrap();
        let original = GridField::new(geom, date(1), values.clone()).unwrap();
        // rotate each zone's cells in place: same multiset per zone
        let mut rearranged = values.clone();
        for zone in partition.zones() {
            let cells: Vec<usize> = (zone.row_start..zone.row_end)
                .flat_map(|r| (zone.col_start..zone.col_end).map(move |c| geom.cell_index(r, c)))
                .collect();
            let shift = rotation % cells.len();
            for (slot, &src) in cells.iter().enumerate() {
                rearranged[cells[(slot + shift) % cells.len()]] = values[src];
            }
        }
        let moved = GridField::new(geom, date(2), rearranged).unwrap();
        let sig_a = signature(&original, &partition, &edges, 1e-9, 0).unwrap();
        let sig_b = signature(&moved, &partition, &edges, 1e-9, 1).unwrap();
        prop_assert_eq!(expert_deviation(&sig_a, &sig_b).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_is_scale_invariant(
        raw in prop::collection::vec(0.01f64..10.0, 45), // n = 10
        labels in prop::collection::vec(0usize..3, 10),
        scale in 0.1f64..50.0,
    ) {
        let m = DissimilarityMatrix::from_condensed(10, Measure::L2, raw.clone()).unwrap();
        let scaled_values: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        let scaled = DissimilarityMatrix::from_condensed(10, Measure::L2, scaled_values).unwrap();
        match (silhouette(&m, &labels), silhouette(&scaled, &labels)) {
            (Ok(a), Ok(b)) => {
                for (sa, sb) in a.per_sample.iter().zip(&b.per_sample) {
                    prop_assert!((sa - sb).abs() < 1e-12);
                }
            }
            (Err(_), Err(_)) => {} // degenerate labelings rejected alike
            _ => prop_assert!(false, "scaling changed validity"),
        }
    }

    #[test]
    fn stack_round_trip_preserves_bits_and_masks(
        cells in prop::collection::vec((0.0f32..500.0, prop::bool::ANY), 12),
        n_days in 1usize..4,
    ) {
        let geom = GridGeometry::index_grid(3, 4).unwrap();
        let days: Vec<GridField> = (0..n_days)
            .map(|d| {
                let values: Vec<f32> = cells.iter().map(|(v, _)| v + d as f32).collect();
                let mask: Vec<bool> = cells.iter().map(|(_, m)| *m).collect();
                GridField::with_missing(
                    geom,
                    chrono::NaiveDate::from_ymd_opt(2010, 6, 1)
                        .unwrap()
                        .checked_add_days(chrono::Days::new(d as u64))
                        .unwrap(),
                    values,
                    Some(mask),
                )
                .unwrap()
            })
            .collect();
        let stack = FieldStack::new(geom, "rainfall", "mm", days).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stack.json");
        save_stack(&stack, &path).unwrap();
        let back = load_stack(&path).unwrap();
        prop_assert_eq!(back.len(), stack.len());
        for (da, db) in stack.days().iter().zip(back.days()) {
            prop_assert_eq!(da.date(), db.date());
            for cell in 0..geom.n_cells() {
                prop_assert_eq!(da.is_missing(cell), db.is_missing(cell));
                prop_assert_eq!(da.values()[cell].to_bits(), db.values()[cell].to_bits());
            }
        }
    }
}
