//! Histogram quantization: bin-edge construction (quantile-derived presets
//! and the Beaufort scale), conversion of value lists into smoothed
//! frequency histograms, and per-day zone signatures.
//!
//! Bins follow the left-open, right-closed convention `]a, b]`. With a zero
//! bin, exact zeros form their own category ahead of the intervals; the last
//! interval is always open towards +inf, so every finite non-negative value
//! lands in exactly one bin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{extract_zone, GridField, ZonePartition};

/// Ordered histogram boundaries for one physical variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    variable: String,
    zero_bin: bool,
    edges: Vec<f64>,
}

impl BinEdges {
    pub fn new(variable: impl Into<String>, zero_bin: bool, edges: Vec<f64>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::Edges {
                detail: "at least one edge is required".into(),
            });
        }
        if !edges.iter().all(|e| e.is_finite()) {
            return Err(Error::Edges {
                detail: "edges must be finite".into(),
            });
        }
        for w in edges.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Edges {
                    detail: format!("edges must be strictly increasing, got {} then {}", w[0], w[1]),
                });
            }
        }
        if zero_bin && edges[0] <= 0.0 {
            return Err(Error::Edges {
                detail: format!("zero bin requires a positive first edge, got {}", edges[0]),
            });
        }
        Ok(BinEdges {
            variable: variable.into(),
            zero_bin,
            edges,
        })
    }

    /// The shipped rainfall preset: a zero category plus eight quantile
    /// intervals in millimetres.
    pub fn rainfall_table1() -> Self {
        BinEdges::new("rainfall", true, vec![1.2, 2.2, 5.2, 8.7, 16.4, 26.9, 59.2])
            .expect("preset edges are valid")
    }

    /// Beaufort-force speed boundaries in m/s; 13 bins for forces 0 through
    /// 12, the last open-ended.
    pub fn beaufort() -> Self {
        BinEdges::new(
            "wind_speed",
            false,
            vec![0.5, 1.5, 3.3, 5.5, 8.0, 10.8, 13.9, 17.2, 20.7, 24.5, 28.4, 32.6],
        )
        .expect("preset edges are valid")
    }

    /// Derives edges from empirical quantiles of a reference sample, with
    /// linear interpolation between the closest order statistics. With
    /// `zero_bin`, zeros get their own category and the quantiles are taken
    /// over the strictly positive values only.
    pub fn from_quantiles(
        variable: impl Into<String>,
        reference_values: &[f64],
        centiles: &[f64],
        zero_bin: bool,
    ) -> Result<Self> {
        if centiles.is_empty() {
            return Err(Error::Edges {
                detail: "at least one centile is required".into(),
            });
        }
        for c in centiles {
            if !(*c > 0.0 && *c < 1.0) {
                return Err(Error::Edges {
                    detail: format!("centile {c} is outside (0, 1)"),
                });
            }
        }
        for w in centiles.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Edges {
                    detail: "centiles must be strictly increasing".into(),
                });
            }
        }
        let mut sample: Vec<f64> = if zero_bin {
            reference_values
                .iter()
                .copied()
                .filter(|v| v.is_finite() && *v > 0.0)
                .collect()
        } else {
            reference_values.iter().copied().filter(|v| v.is_finite()).collect()
        };
        if sample.is_empty() {
            return Err(Error::EmptyReference);
        }
        sample.sort_by(f64::total_cmp);
        let edges: Vec<f64> = centiles.iter().map(|&c| quantile_linear(&sample, c)).collect();
        BinEdges::new(variable, zero_bin, edges)
    }

    /// Number of histogram bins these edges induce.
    pub fn bin_count(&self) -> usize {
        self.edges.len() + 1 + usize::from(self.zero_bin)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn zero_bin(&self) -> bool {
        self.zero_bin
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    /// Bin index of a value. Total over finite inputs: with a zero bin,
    /// values <= 0 land there; otherwise everything up to the first edge is
    /// bin 0, and anything past the last edge lands in the overflow bin.
    pub fn bin_index(&self, value: f64) -> usize {
        let offset = usize::from(self.zero_bin);
        if self.zero_bin && value <= 0.0 {
            return 0;
        }
        match self.edges.iter().position(|&e| value <= e) {
            Some(j) => j + offset,
            None => self.edges.len() + offset,
        }
    }

    /// Value range `(lo, hi)` covered by a bin: the zero bin is `(0, 0)`,
    /// interval bins are their `]lo, hi]` bounds, and the overflow bin runs
    /// to +inf. Used by the synthetic generators to sample inside a bin.
    pub fn bin_range(&self, bin: usize) -> (f64, f64) {
        assert!(bin < self.bin_count(), "bin {bin} out of range");
        if self.zero_bin {
            if bin == 0 {
                return (0.0, 0.0);
            }
            let j = bin - 1;
            let lo = if j == 0 { 0.0 } else { self.edges[j - 1] };
            let hi = self.edges.get(j).copied().unwrap_or(f64::INFINITY);
            (lo, hi)
        } else {
            let lo = if bin == 0 { 0.0 } else { self.edges[bin - 1] };
            let hi = self.edges.get(bin).copied().unwrap_or(f64::INFINITY);
            (lo, hi)
        }
    }
}

/// Empirical quantile with linear interpolation between the closest order
/// statistics of a sorted sample.
fn quantile_linear(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Normalized frequency histogram. `count` is the number of source values;
/// a zero count marks the empty histogram, which is represented uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    probs: Vec<f64>,
    count: usize,
}

impl Histogram {
    /// Wraps raw probabilities; callers guarantee normalization.
    pub fn from_probs(probs: Vec<f64>, count: usize) -> Self {
        Histogram { probs, count }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_bins(&self) -> usize {
        self.probs.len()
    }

    /// True when the histogram came from zero values.
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Bin-wise arithmetic mean of member histograms, re-smoothed with
    /// `epsilon`. Members must share the bin count.
    pub fn mean_of(members: &[&Histogram], epsilon: f64) -> Result<Histogram> {
        let first = members.first().ok_or(Error::EmptyCluster { cluster: 0 })?;
        let m = first.n_bins();
        let mut probs = vec![0.0; m];
        let mut count = 0usize;
        for h in members {
            if h.n_bins() != m {
                return Err(Error::BinCountMismatch {
                    left: m,
                    right: h.n_bins(),
                });
            }
            for (acc, p) in probs.iter_mut().zip(&h.probs) {
                *acc += p;
            }
            count += h.count;
        }
        let inv = 1.0 / members.len() as f64;
        for p in probs.iter_mut() {
            *p *= inv;
        }
        floor_and_renormalize(&mut probs, epsilon);
        Ok(Histogram { probs, count })
    }
}

/// Floors every bin at `epsilon`, then renormalizes to unit mass.
fn floor_and_renormalize(probs: &mut [f64], epsilon: f64) {
    for p in probs.iter_mut() {
        if *p < epsilon {
            *p = epsilon;
        }
    }
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        for p in probs.iter_mut() {
            *p /= total;
        }
    }
}

/// Bins `values`, normalizes counts to frequencies, floors every bin at
/// `epsilon` and renormalizes. An empty input yields the uniform histogram
/// flagged empty.
pub fn quantize(values: &[f64], edges: &BinEdges, epsilon: f64) -> Histogram {
    let m = edges.bin_count();
    if values.is_empty() {
        return Histogram {
            probs: vec![1.0 / m as f64; m],
            count: 0,
        };
    }
    let mut counts = vec![0usize; m];
    for &v in values {
        counts[edges.bin_index(v)] += 1;
    }
    let inv = 1.0 / values.len() as f64;
    let mut probs: Vec<f64> = counts.iter().map(|&c| c as f64 * inv).collect();
    floor_and_renormalize(&mut probs, epsilon);
    Histogram {
        probs,
        count: values.len(),
    }
}

/// One day summarized as `p` zone histograms: the unit the expert deviation
/// compares.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySignature {
    zone_histograms: Vec<Histogram>,
    day_index: usize,
}

impl DaySignature {
    pub fn new(zone_histograms: Vec<Histogram>, day_index: usize) -> Self {
        DaySignature {
            zone_histograms,
            day_index,
        }
    }

    pub fn zone_histograms(&self) -> &[Histogram] {
        &self.zone_histograms
    }

    pub fn n_zones(&self) -> usize {
        self.zone_histograms.len()
    }

    pub fn n_bins(&self) -> usize {
        self.zone_histograms.first().map_or(0, Histogram::n_bins)
    }

    pub fn day_index(&self) -> usize {
        self.day_index
    }
}

/// Quantizes each zone of one day into a signature.
pub fn signature(
    day: &GridField,
    partition: &ZonePartition,
    edges: &BinEdges,
    epsilon: f64,
    day_index: usize,
) -> Result<DaySignature> {
    let mut zone_histograms = Vec::with_capacity(partition.len());
    for z in 0..partition.len() {
        let values = extract_zone(day, partition, z)?;
        zone_histograms.push(quantize(&values, edges, epsilon));
    }
    Ok(DaySignature::new(zone_histograms, day_index))
}

/// Signatures for every day of a stack, in day order.
pub fn signatures(
    stack: &crate::grid::FieldStack,
    partition: &ZonePartition,
    edges: &BinEdges,
    epsilon: f64,
) -> Result<Vec<DaySignature>> {
    use rayon::prelude::*;
    partition.check_grid(stack.geometry())?;
    stack
        .days()
        .par_iter()
        .enumerate()
        .map(|(i, day)| signature(day, partition, edges, epsilon, i))
        .collect()
}
