//! Clustering backends over an abstract point/centroid space, so that
//! K-means and hierarchical agglomeration run identically on raw fields
//! (Euclidean distance) and on zone signatures (expert deviation).

mod hac;
mod kmeans;

pub use hac::{hac_dendrogram, hac_fit, Dendrogram, Linkage, Merge};
pub use kmeans::{kmeans_fit, KMeansConfig};

use serde::{Deserialize, Serialize};

use crate::dissim::{kls_raw, l2_distance, Measure};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::quantize::{DaySignature, Histogram};

/// A dissimilarity space with a centroid construction: the minimal
/// interface both clustering backends need.
pub trait ClusterSpace: Sync {
    type Point: Sync;
    type Centroid: Clone + Send + Sync;

    fn measure(&self) -> Measure;

    /// Rejects point collections that are not mutually comparable
    /// (mismatched grids, zone counts, or bin counts). The other methods
    /// assume a validated collection.
    fn validate_points(&self, points: &[Self::Point]) -> Result<()>;

    fn dissimilarity(&self, point: &Self::Point, centroid: &Self::Centroid) -> f64;

    fn point_dissimilarity(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// Centroid of the members listed by index (ascending, non-empty).
    fn centroid(&self, points: &[Self::Point], members: &[usize]) -> Result<Self::Centroid>;

    fn centroid_from_point(&self, point: &Self::Point) -> Self::Centroid;
}

/// Per-cell mean field, kept in f64 to avoid accumulation error.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorCentroid {
    values: Vec<f64>,
}

impl VectorCentroid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Euclidean space over raw grids. Missing cells contribute as zero, the
/// same convention the pairwise L2 distance applies to one-sided gaps.
#[derive(Debug, Clone, Copy, Default)]
pub struct L2Space;

impl ClusterSpace for L2Space {
    type Point = GridField;
    type Centroid = VectorCentroid;

    fn measure(&self) -> Measure {
        Measure::L2
    }

    fn validate_points(&self, points: &[Self::Point]) -> Result<()> {
        for (i, p) in points.iter().enumerate().skip(1) {
            if p.geometry() != points[0].geometry() {
                return Err(Error::GeometryMismatch {
                    detail: format!("field {i} does not share the common grid"),
                });
            }
        }
        Ok(())
    }

    fn dissimilarity(&self, point: &Self::Point, centroid: &Self::Centroid) -> f64 {
        debug_assert_eq!(point.values().len(), centroid.values.len());
        let mut sum = 0.0;
        for (cell, &c) in centroid.values.iter().enumerate() {
            let d = point.effective(cell) - c;
            sum += d * d;
        }
        sum.sqrt()
    }

    fn point_dissimilarity(&self, a: &Self::Point, b: &Self::Point) -> f64 {
        l2_distance(a, b).expect("points validated")
    }

    fn centroid(&self, points: &[Self::Point], members: &[usize]) -> Result<Self::Centroid> {
        let first = *members.first().ok_or(Error::EmptyCluster { cluster: 0 })?;
        let n_cells = points[first].values().len();
        let mut values = vec![0.0f64; n_cells];
        for &m in members {
            for (cell, v) in values.iter_mut().enumerate() {
                *v += points[m].effective(cell);
            }
        }
        let inv = 1.0 / members.len() as f64;
        for v in &mut values {
            *v *= inv;
        }
        Ok(VectorCentroid { values })
    }

    fn centroid_from_point(&self, point: &Self::Point) -> Self::Centroid {
        VectorCentroid {
            values: (0..point.values().len()).map(|c| point.effective(c)).collect(),
        }
    }
}

/// Per-zone mean histogram, re-smoothed so divergences stay finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureCentroid {
    zone_histograms: Vec<Histogram>,
}

impl SignatureCentroid {
    pub fn zone_histograms(&self) -> &[Histogram] {
        &self.zone_histograms
    }
}

/// Expert-deviation space over day signatures.
#[derive(Debug, Clone, Copy)]
pub struct SignatureSpace {
    pub epsilon: f64,
}

impl SignatureSpace {
    pub fn new(epsilon: f64) -> Self {
        SignatureSpace { epsilon }
    }
}

impl ClusterSpace for SignatureSpace {
    type Point = DaySignature;
    type Centroid = SignatureCentroid;

    fn measure(&self) -> Measure {
        Measure::Ed
    }

    fn validate_points(&self, points: &[Self::Point]) -> Result<()> {
        if let Some(first) = points.first() {
            for p in &points[1..] {
                if p.n_zones() != first.n_zones() {
                    return Err(Error::ZoneCountMismatch {
                        left: first.n_zones(),
                        right: p.n_zones(),
                    });
                }
                if p.n_bins() != first.n_bins() {
                    return Err(Error::BinCountMismatch {
                        left: first.n_bins(),
                        right: p.n_bins(),
                    });
                }
            }
        }
        Ok(())
    }

    fn dissimilarity(&self, point: &Self::Point, centroid: &Self::Centroid) -> f64 {
        debug_assert_eq!(point.n_zones(), centroid.zone_histograms.len());
        let mut sum = 0.0;
        for (h, c) in point.zone_histograms().iter().zip(&centroid.zone_histograms) {
            sum += kls_raw(h.probs(), c.probs());
        }
        sum / point.n_zones() as f64
    }

    fn point_dissimilarity(&self, a: &Self::Point, b: &Self::Point) -> f64 {
        let mut sum = 0.0;
        for (ha, hb) in a.zone_histograms().iter().zip(b.zone_histograms()) {
            sum += kls_raw(ha.probs(), hb.probs());
        }
        sum / a.n_zones() as f64
    }

    fn centroid(&self, points: &[Self::Point], members: &[usize]) -> Result<Self::Centroid> {
        let first = *members.first().ok_or(Error::EmptyCluster { cluster: 0 })?;
        let n_zones = points[first].n_zones();
        let mut zone_histograms = Vec::with_capacity(n_zones);
        for z in 0..n_zones {
            let zone_members: Vec<&Histogram> =
                members.iter().map(|&m| &points[m].zone_histograms()[z]).collect();
            zone_histograms.push(Histogram::mean_of(&zone_members, self.epsilon)?);
        }
        Ok(SignatureCentroid { zone_histograms })
    }

    fn centroid_from_point(&self, point: &Self::Point) -> Self::Centroid {
        SignatureCentroid {
            zone_histograms: point.zone_histograms().to_vec(),
        }
    }
}

/// Which clustering backend to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Kms,
    Hac(Linkage),
}

/// Outcome of a clustering run: cluster labels per day, the centroids,
/// the day index closest to each centroid, and convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct ClusteringResult<C> {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<C>,
    pub representatives: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: Option<u64>,
    /// Sum of day-to-centroid dissimilarities under the final labeling.
    pub objective: f64,
    /// Objective immediately before and after each relabeling pass (the
    /// pass assigns every day to its nearest centroid, so the second
    /// entry never exceeds the first).
    pub step_objectives: Vec<(f64, f64)>,
}

/// Member day indices per cluster, ascending within each cluster.
pub fn cluster_members(assignments: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k];
    for (day, &c) in assignments.iter().enumerate() {
        members[c].push(day);
    }
    members
}

/// Sum of dissimilarities from each point to its assigned centroid.
pub fn labeling_objective<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    centroids: &[S::Centroid],
    assignments: &[usize],
) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &c)| space.dissimilarity(p, &centroids[c]))
        .sum()
}

/// For each cluster, the member day closest to the cluster centroid
/// (lowest day index on ties).
pub fn representative_elements<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    assignments: &[usize],
    centroids: &[S::Centroid],
) -> Result<Vec<usize>> {
    let members = cluster_members(assignments, centroids.len());
    let mut representatives = Vec::with_capacity(centroids.len());
    for (c, cluster) in members.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for &day in cluster {
            let d = space.dissimilarity(&points[day], &centroids[c]);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((day, d));
            }
        }
        let (day, _) = best.ok_or(Error::EmptyCluster { cluster: c })?;
        representatives.push(day);
    }
    Ok(representatives)
}

/// Deserialized linkage names for run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkageName {
    Single,
    Complete,
    Average,
    Ward,
}

impl From<LinkageName> for Linkage {
    fn from(name: LinkageName) -> Linkage {
        match name {
            LinkageName::Single => Linkage::Single,
            LinkageName::Complete => Linkage::Complete,
            LinkageName::Average => Linkage::Average,
            LinkageName::Ward => Linkage::Ward,
        }
    }
}
