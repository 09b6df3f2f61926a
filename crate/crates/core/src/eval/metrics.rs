//! Clustering quality metrics computed from a precomputed dissimilarity
//! matrix (silhouette) or from label vectors alone (adjusted Rand index,
//! monthly distributions).

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::Serialize;

use crate::dissim::{DissimilarityMatrix, Measure};
use crate::error::{Error, Result};

/// Silhouette scores for one labeling: per-day widths, their overall mean,
/// and per-cluster means, all under the matrix's own measure.
#[derive(Debug, Clone, Serialize)]
pub struct SilhouetteReport {
    pub per_sample: Vec<f64>,
    pub mean: f64,
    pub per_cluster_mean: Vec<f64>,
    pub k: usize,
    pub measure: Measure,
}

fn validated_sizes(n: usize, assignments: &[usize]) -> Result<Vec<usize>> {
    if assignments.len() != n {
        return Err(Error::AssignmentLength {
            expected: n,
            actual: assignments.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidK { k: 0, n: 0 });
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if let Some(cluster) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster { cluster });
    }
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    Ok(sizes)
}

/// Rousseeuw silhouette widths. Days in singleton clusters score 0, as do
/// days whose within- and nearest-other-cluster means both vanish.
pub fn silhouette(
    matrix: &DissimilarityMatrix,
    assignments: &[usize],
) -> Result<SilhouetteReport> {
    let n = matrix.n_days();
    let sizes = validated_sizes(n, assignments)?;
    let k = sizes.len();
    let per_sample: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = assignments[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0f64; k];
            for j in 0..n {
                if j != i {
                    sums[assignments[j]] += matrix.get(i, j);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect();
    let mean = per_sample.iter().sum::<f64>() / n as f64;
    let mut cluster_sums = vec![0.0f64; k];
    for (i, &s) in per_sample.iter().enumerate() {
        cluster_sums[assignments[i]] += s;
    }
    let per_cluster_mean: Vec<f64> = cluster_sums
        .iter()
        .zip(&sizes)
        .map(|(sum, &size)| sum / size as f64)
        .collect();
    Ok(SilhouetteReport {
        per_sample,
        mean,
        per_cluster_mean,
        k,
        measure: matrix.measure(),
    })
}

fn comb2(x: usize) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same days: 1 for
/// identical partitions, around 0 for independent ones. Label values do
/// not need to be dense.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::AssignmentLength {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let n = a.len();
    if n == 0 {
        return Ok(1.0);
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![0usize; ka * kb];
    let mut rows = vec![0usize; ka];
    let mut cols = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let index: f64 = table.iter().map(|&c| comb2(c)).sum();
    let row_sum: f64 = rows.iter().map(|&c| comb2(c)).sum();
    let col_sum: f64 = cols.iter().map(|&c| comb2(c)).sum();
    let expected = row_sum * col_sum / comb2(n);
    let max_index = 0.5 * (row_sum + col_sum);
    if max_index == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// How many days of each cluster fall in each calendar month; rows are
/// clusters, columns are January through December.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonthlyDistribution {
    pub counts: Vec<[usize; 12]>,
    pub k: usize,
}

pub fn monthly_distribution(
    assignments: &[usize],
    k: usize,
    dates: &[NaiveDate],
) -> Result<MonthlyDistribution> {
    if assignments.len() != dates.len() {
        return Err(Error::AssignmentLength {
            expected: dates.len(),
            actual: assignments.len(),
        });
    }
    let mut counts = vec![[0usize; 12]; k];
    for (&a, date) in assignments.iter().zip(dates) {
        if a >= k {
            return Err(Error::Partition {
                detail: format!("label {a} exceeds the cluster count {k}"),
            });
        }
        counts[a][date.month0() as usize] += 1;
    }
    Ok(MonthlyDistribution { counts, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix_from_scalars(values: &[f64]) -> DissimilarityMatrix {
        DissimilarityMatrix::compute(values.len(), Measure::L2, |i, j| {
            Ok((values[i] - values[j]).abs())
        })
        .unwrap()
    }

    /// Direct transcription of the silhouette definition, kept deliberately
    /// naive as an oracle for the production implementation.
    fn brute_silhouette(matrix: &DissimilarityMatrix, assignments: &[usize]) -> Vec<f64> {
        let n = matrix.n_days();
        let k = assignments.iter().max().unwrap() + 1;
        (0..n)
            .map(|i| {
                let own = assignments[i];
                let own_others: Vec<usize> =
                    (0..n).filter(|&j| j != i && assignments[j] == own).collect();
                if own_others.is_empty() {
                    return 0.0;
                }
                let a = own_others.iter().map(|&j| matrix.get(i, j)).sum::<f64>()
                    / own_others.len() as f64;
                let mut b = f64::INFINITY;
                for c in 0..k {
                    if c == own {
                        continue;
                    }
                    let members: Vec<usize> =
                        (0..n).filter(|&j| assignments[j] == c).collect();
                    let mean =
                        members.iter().map(|&j| matrix.get(i, j)).sum::<f64>() / members.len() as f64;
                    b = b.min(mean);
                }
                if a.max(b) == 0.0 {
                    0.0
                } else {
                    (b - a) / a.max(b)
                }
            })
            .collect()
    }

    #[test]
    fn tight_groups_score_near_one() {
        let m = matrix_from_scalars(&[0.0, 0.1, 0.2, 10.0, 10.1, 10.2]);
        let report = silhouette(&m, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!(report.mean > 0.95, "mean = {}", report.mean);
        assert_eq!(report.k, 2);
        assert_eq!(report.per_cluster_mean.len(), 2);
    }

    #[test]
    fn matches_naive_reimplementation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let values: Vec<f64> = (0..15).map(|_| rng.random::<f64>() * 10.0).collect();
            let assignments: Vec<usize> = (0..15).map(|_| rng.random_range(0..3)).collect();
            let m = matrix_from_scalars(&values);
            if validated_sizes(15, &assignments).is_err() {
                continue;
            }
            let report = silhouette(&m, &assignments).unwrap();
            let brute = brute_silhouette(&m, &assignments);
            for (got, want) in report.per_sample.iter().zip(&brute) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singleton_cluster_scores_zero() {
        let m = matrix_from_scalars(&[0.0, 0.1, 50.0]);
        let report = silhouette(&m, &[0, 0, 1]).unwrap();
        assert_eq!(report.per_sample[2], 0.0);
        assert!(report.per_sample[0] > 0.9);
    }

    #[test]
    fn coincident_points_score_zero() {
        let m = matrix_from_scalars(&[1.0, 1.0, 1.0, 1.0]);
        let report = silhouette(&m, &[0, 0, 1, 1]).unwrap();
        assert_eq!(report.per_sample, vec![0.0; 4]);
        assert_eq!(report.mean, 0.0);
    }

    #[test]
    fn rejects_single_cluster_and_gaps() {
        let m = matrix_from_scalars(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            silhouette(&m, &[0, 0, 0]).unwrap_err(),
            Error::SingleCluster
        ));
        assert!(matches!(
            silhouette(&m, &[0, 0, 2]).unwrap_err(),
            Error::EmptyCluster { cluster: 1 }
        ));
        assert!(matches!(
            silhouette(&m, &[0, 1]).unwrap_err(),
            Error::AssignmentLength { expected: 3, actual: 2 }
        ));
    }

    #[test]
    fn random_labels_average_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let m = matrix_from_scalars(&values);
        let mut total = 0.0;
        let mut trials = 0;
        while trials < 10 {
            let assignments: Vec<usize> = (0..40).map(|_| rng.random_range(0..4)).collect();
            if validated_sizes(40, &assignments).is_err() {
                continue;
            }
            total += silhouette(&m, &assignments).unwrap().mean;
            trials += 1;
        }
        // random labels carry no structure: never meaningfully positive
        assert!(total / 10.0 < 0.05, "mean = {}", total / 10.0);
    }

    #[test]
    fn rand_index_reference_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        // fully crossed partitions: every pair split, classic value -0.5
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((ari + 0.5).abs() < 1e-12);
        // degenerate but equal trivial partitions
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn rand_index_near_zero_for_independent_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut total = 0.0;
        for _ in 0..20 {
            let a: Vec<usize> = (0..200).map(|_| rng.random_range(0..4)).collect();
            let b: Vec<usize> = (0..200).map(|_| rng.random_range(0..4)).collect();
            total += adjusted_rand_index(&a, &b).unwrap();
        }
        assert!((total / 20.0).abs() < 0.02);
    }

    #[test]
    fn monthly_counts_by_calendar_month() {
        let dates: Vec<NaiveDate> = vec![
            "2000-01-05".parse().unwrap(),
            "2000-01-20".parse().unwrap(),
            "2000-02-01".parse().unwrap(),
            "2001-01-09".parse().unwrap(),
        ];
        let dist = monthly_distribution(&[0, 1, 1, 0], 2, &dates).unwrap();
        assert_eq!(dist.counts[0][0], 2); // cluster 0: two Januaries
        assert_eq!(dist.counts[1][0], 1);
        assert_eq!(dist.counts[1][1], 1);
        assert_eq!(dist.counts[0].iter().sum::<usize>(), 2);
    }
}
