//! Agglomerative hierarchical clustering on a precomputed dissimilarity
//! matrix, via the Lance-Williams recurrences on a working copy of the
//! full square matrix. Intended for day counts where the O(n^3) scan is
//! comfortable; the K-means backend covers larger inputs.

use serde::Serialize;

use crate::cluster::{
    cluster_members, labeling_objective, representative_elements, ClusterSpace, ClusteringResult,
};
use crate::dissim::{DissimilarityMatrix, Measure};
use crate::error::{Error, Result};

/// How the dissimilarity between merged clusters is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    Average,
    /// Minimum-variance merging; meaningful only for Euclidean input, so
    /// it is rejected on matrices computed under other measures.
    Ward,
}

impl std::fmt::Display for Linkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
            Linkage::Ward => "ward",
        };
        write!(f, "{name}")
    }
}

/// One agglomeration step. Clusters are identified by their smallest
/// member day, so `left < right` and the merged cluster keeps id `left`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// The full merge tree over `n` days: `n - 1` merges in height order as
/// produced by the agglomeration loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    linkage: Linkage,
    measure: Measure,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn linkage(&self) -> Linkage {
        self.linkage
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Cluster labels after undoing the tree down to `k` clusters. Labels
    /// are dense 0..k, ordered by each cluster's smallest member day.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidK { k, n: self.n });
        }
        let mut group: Vec<usize> = (0..self.n).collect();
        for merge in &self.merges[..self.n - k] {
            for g in group.iter_mut() {
                if *g == merge.right {
                    *g = merge.left;
                }
            }
        }
        let mut keys: Vec<usize> = group.clone();
        keys.sort_unstable();
        keys.dedup();
        debug_assert_eq!(keys.len(), k);
        Ok(group
            .iter()
            .map(|g| keys.binary_search(g).expect("every group key is listed"))
            .collect())
    }
}

fn lance_williams(
    linkage: Linkage,
    d_il: f64,
    d_jl: f64,
    d_ij: f64,
    ni: usize,
    nj: usize,
    nl: usize,
) -> f64 {
    match linkage {
        Linkage::Single => d_il.min(d_jl),
        Linkage::Complete => d_il.max(d_jl),
        Linkage::Average => {
            let (ni, nj) = (ni as f64, nj as f64);
            (ni * d_il + nj * d_jl) / (ni + nj)
        }
        Linkage::Ward => {
            let (ni, nj, nl) = (ni as f64, nj as f64, nl as f64);
            ((ni + nl) * d_il + (nj + nl) * d_jl - nl * d_ij) / (ni + nj + nl)
        }
    }
}

/// Builds the complete merge tree. Each round merges the globally closest
/// active pair, scanning in ascending id order so exact ties resolve to
/// the lexicographically smallest pair. Ward linkage works on squared
/// Euclidean distances internally and reports square-rooted heights.
pub fn hac_dendrogram(matrix: &DissimilarityMatrix, linkage: Linkage) -> Result<Dendrogram> {
    if linkage == Linkage::Ward && matrix.measure() != Measure::L2 {
        return Err(Error::MeasureMismatch {
            requested: "ward linkage".into(),
            actual: matrix.measure().to_string(),
        });
    }
    let n = matrix.n_days();
    let squared = linkage == Linkage::Ward;
    let mut work = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = matrix.get(i, j);
            let d = if squared { d * d } else { d };
            work[i * n + j] = d;
            work[j * n + i] = d;
        }
    }
    let mut active = vec![true; n];
    let mut sizes = vec![1usize; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = work[i * n + j];
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, d_ij) = best.expect("two active clusters remain");
        for l in 0..n {
            if !active[l] || l == i || l == j {
                continue;
            }
            let d_new = lance_williams(
                linkage,
                work[i * n + l],
                work[j * n + l],
                d_ij,
                sizes[i],
                sizes[j],
                sizes[l],
            );
            work[i * n + l] = d_new;
            work[l * n + i] = d_new;
        }
        active[j] = false;
        sizes[i] += sizes[j];
        merges.push(Merge {
            left: i,
            right: j,
            height: if squared { d_ij.sqrt() } else { d_ij },
            size: sizes[i],
        });
    }
    Ok(Dendrogram {
        n,
        linkage,
        measure: matrix.measure(),
        merges,
    })
}

/// Agglomerative clustering cut at `k`, packaged like a K-means result:
/// centroids, representatives, and the labeling objective are derived
/// from the cut through the same space the matrix was computed in.
pub fn hac_fit<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    matrix: &DissimilarityMatrix,
    k: usize,
    linkage: Linkage,
) -> Result<ClusteringResult<S::Centroid>> {
    if matrix.measure() != space.measure() {
        return Err(Error::MeasureMismatch {
            requested: format!("clustering in the {} space", space.measure()),
            actual: matrix.measure().to_string(),
        });
    }
    if matrix.n_days() != points.len() {
        return Err(Error::AssignmentLength {
            expected: points.len(),
            actual: matrix.n_days(),
        });
    }
    space.validate_points(points)?;
    let dendrogram = hac_dendrogram(matrix, linkage)?;
    let assignments = dendrogram.cut(k)?;
    let members = cluster_members(&assignments, k);
    let mut centroids = Vec::with_capacity(k);
    for member_days in &members {
        centroids.push(space.centroid(points, member_days)?);
    }
    let objective = labeling_objective(space, points, &centroids, &assignments);
    let representatives = representative_elements(space, points, &assignments, &centroids)?;
    Ok(ClusteringResult {
        k,
        assignments,
        centroids,
        representatives,
        iterations: matrix.n_days().saturating_sub(k),
        converged: true,
        seed: None,
        objective,
        step_objectives: Vec::new(),
    })
}
