//! Sweeping the cluster count: fit at every k in a range and score each
//! labeling with the mean silhouette, under one dissimilarity measure.

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::{hac_dendrogram, kmeans_fit, Algorithm, ClusterSpace, KMeansConfig};
use crate::dissim::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::eval::silhouette;

/// One sweep entry: the cluster count and the mean silhouette width the
/// fitted labeling achieved.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub k: usize,
    pub mean_silhouette: f64,
}

/// The sweep entry with the highest mean silhouette; earlier k wins ties.
pub fn best_sweep_point(points: &[SweepPoint]) -> Option<SweepPoint> {
    points
        .iter()
        .copied()
        .reduce(|best, p| if p.mean_silhouette > best.mean_silhouette { p } else { best })
}

/// Fits every k in `k_min..=k_max` with the requested backend and scores
/// each labeling against `matrix`. K-means runs its full restart schedule
/// per k; agglomeration builds one tree and cuts it at each k.
pub fn k_sweep<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    matrix: &DissimilarityMatrix,
    algorithm: Algorithm,
    k_min: usize,
    k_max: usize,
    base: &KMeansConfig,
) -> Result<Vec<SweepPoint>> {
    let n = points.len();
    if matrix.n_days() != n {
        return Err(Error::AssignmentLength {
            expected: n,
            actual: matrix.n_days(),
        });
    }
    if matrix.measure() != space.measure() {
        return Err(Error::MeasureMismatch {
            requested: format!("a sweep in the {} space", space.measure()),
            actual: matrix.measure().to_string(),
        });
    }
    if k_min < 2 || k_min > k_max || k_max > n {
        return Err(Error::InvalidK { k: k_max.max(k_min), n });
    }
    space.validate_points(points)?;
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let labelings: Vec<Vec<usize>> = match algorithm {
        Algorithm::Kms => ks
            .par_iter()
            .map(|&k| {
                let cfg = KMeansConfig { k, ..*base };
                kmeans_fit(space, points, &cfg).map(|r| r.assignments)
            })
            .collect::<Result<_>>()?,
        Algorithm::Hac(linkage) => {
            let tree = hac_dendrogram(matrix, linkage)?;
            ks.iter().map(|&k| tree.cut(k)).collect::<Result<_>>()?
        }
    };
    ks.iter()
        .zip(labelings)
        .map(|(&k, assignments)| {
            Ok(SweepPoint {
                k,
                mean_silhouette: silhouette(matrix, &assignments)?.mean,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{L2Space, Linkage};
    use crate::dissim::pairwise_l2;
    use crate::grid::{GridField, GridGeometry};

    fn scalar_points(values: &[f32]) -> Vec<GridField> {
        let geom = GridGeometry::index_grid(1, 1).unwrap();
        values
            .iter()
            .enumerate()
            .map(|(d, &v)| {
                GridField::new(
                    geom,
                    chrono::NaiveDate::from_ymd_opt(2003, 1, 1)
                        .unwrap()
                        .checked_add_days(chrono::Days::new(d as u64))
                        .unwrap(),
                    vec![v],
                )
                .unwrap()
            })
            .collect()
    }

    fn three_groups() -> Vec<GridField> {
        let mut values = Vec::new();
        for base in [0.0f32, 40.0, 90.0] {
            for i in 0..6 {
                values.push(base + i as f32 * 0.3);
            }
        }
        scalar_points(&values)
    }

    #[test]
    fn peak_sits_at_the_true_group_count() {
        let points = three_groups();
        let matrix = pairwise_l2(&points).unwrap();
        for algorithm in [Algorithm::Kms, Algorithm::Hac(Linkage::Average)] {
            let sweep = k_sweep(
                &L2Space,
                &points,
                &matrix,
                algorithm,
                2,
                6,
                &KMeansConfig::new(0, 12),
            )
            .unwrap();
            assert_eq!(sweep.len(), 5);
            assert_eq!(sweep[0].k, 2);
            let best = best_sweep_point(&sweep).unwrap();
            assert_eq!(best.k, 3);
        }
    }

    #[test]
    fn rejects_mismatched_sizes_and_ranges() {
        let points = three_groups();
        let matrix = pairwise_l2(&points[..10]).unwrap();
        let cfg = KMeansConfig::new(0, 1);
        assert!(matches!(
            k_sweep(&L2Space, &points, &matrix, Algorithm::Kms, 2, 4, &cfg).unwrap_err(),
            Error::AssignmentLength { .. }
        ));
        let matrix = pairwise_l2(&points).unwrap();
        assert!(matches!(
            k_sweep(&L2Space, &points, &matrix, Algorithm::Kms, 1, 4, &cfg).unwrap_err(),
            Error::InvalidK { .. }
        ));
        assert!(matches!(
            k_sweep(&L2Space, &points, &matrix, Algorithm::Kms, 2, 99, &cfg).unwrap_err(),
            Error::InvalidK { .. }
        ));
    }
}
