//! Dissimilarity kernels: L2 distance on raw fields, Kullback-Leibler and
//! symmetrized KL on histograms (natural log), the expert deviation over
//! zone signatures, and parallel pairwise-matrix computation.
//!
//! Summation always runs in ascending bin/zone/cell order, and every matrix
//! entry is written by exactly one task, so results are bit-identical
//! regardless of thread count.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::quantize::{DaySignature, Histogram};

/// Which kernel a matrix or clustering run used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    L2,
    #[serde(rename = "ED")]
    Ed,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::L2 => write!(f, "L2"),
            Measure::Ed => write!(f, "ED"),
        }
    }
}

/// Euclidean distance between two fields on the same grid. Cells missing in
/// both days are skipped; a cell missing in only one day contributes as 0
/// on the missing side.
pub fn l2_distance(a: &GridField, b: &GridField) -> Result<f64> {
    if a.geometry() != b.geometry() {
        return Err(Error::GeometryMismatch {
            detail: "L2 distance requires a shared grid".into(),
        });
    }
    let mut sum = 0.0f64;
    for cell in 0..a.values().len() {
        if a.is_missing(cell) && b.is_missing(cell) {
            continue;
        }
        let d = a.effective(cell) - b.effective(cell);
        sum += d * d;
    }
    Ok(sum.sqrt())
}

/// Directed Kullback-Leibler divergence in nats, with `0 ln 0` taken as 0.
/// `q` must have mass in every bin where `p` does; smoothed histograms
/// always satisfy this.
pub fn kl_divergence(p: &Histogram, q: &Histogram) -> Result<f64> {
    if p.n_bins() != q.n_bins() {
        return Err(Error::BinCountMismatch {
            left: p.n_bins(),
            right: q.n_bins(),
        });
    }
    for (bin, (&pc, &qc)) in p.probs().iter().zip(q.probs()).enumerate() {
        if qc <= 0.0 && pc > 0.0 {
            return Err(Error::ZeroBin { bin });
        }
    }
    Ok(kl_raw(p.probs(), q.probs()))
}

/// Symmetrized KL divergence: the sum of both directed divergences.
pub fn kls_divergence(p: &Histogram, q: &Histogram) -> Result<f64> {
    Ok(kl_divergence(p, q)? + kl_divergence(q, p)?)
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (&pc, &qc) in p.iter().zip(q) {
        if pc > 0.0 {
            sum += pc * (pc / qc).ln();
        }
    }
    sum
}

pub(crate) fn kls_raw(p: &[f64], q: &[f64]) -> f64 {
    kl_raw(p, q) + kl_raw(q, p)
}

/// Expert deviation between two day signatures: the mean over zones of the
/// symmetrized KL divergence between the zone histograms.
pub fn expert_deviation(a: &DaySignature, b: &DaySignature) -> Result<f64> {
    if a.n_zones() != b.n_zones() {
        return Err(Error::ZoneCountMismatch {
            left: a.n_zones(),
            right: b.n_zones(),
        });
    }
    let mut sum = 0.0;
    for (ha, hb) in a.zone_histograms().iter().zip(b.zone_histograms()) {
        sum += kls_divergence(ha, hb)?;
    }
    Ok(sum / a.n_zones() as f64)
}

/// Condensed pairwise dissimilarity matrix: the upper triangle of an
/// `n x n` symmetric matrix with a zero diagonal, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n_days: usize,
    measure: Measure,
    values: Vec<f64>,
}

pub fn condensed_len(n: usize) -> usize {
    n * (n - 1) / 2
}

fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl DissimilarityMatrix {
    pub fn from_condensed(n_days: usize, measure: Measure, values: Vec<f64>) -> Result<Self> {
        if values.len() != condensed_len(n_days.max(1)) {
            return Err(Error::AssignmentLength {
                expected: condensed_len(n_days.max(1)),
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::MatrixFile {
                path: "<memory>".into(),
                detail: format!("entry {bad} is not a finite non-negative dissimilarity"),
            });
        }
        Ok(DissimilarityMatrix {
            n_days,
            measure,
            values,
        })
    }

    /// Fills the triangle by evaluating `f(i, j)` for every `i < j`, in
    /// parallel across rows.
    pub fn compute<F>(n_days: usize, measure: Measure, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync,
    {
        let len = condensed_len(n_days.max(1));
        let mut values = vec![0.0f64; len];
        let mut rows: Vec<(usize, &mut [f64])> = Vec::new();
        let mut rest = values.as_mut_slice();
        for i in 0..n_days.saturating_sub(1) {
            let (row, tail) = rest.split_at_mut(n_days - 1 - i);
            rows.push((i, row));
            rest = tail;
        }
        rows.into_par_iter().try_for_each(|(i, row)| {
            for (off, slot) in row.iter_mut().enumerate() {
                *slot = f(i, i + 1 + off)?;
            }
            Ok::<(), Error>(())
        })?;
        DissimilarityMatrix::from_condensed(n_days, measure, values)
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.values[condensed_index(self.n_days, i, j)]
    }

    /// Writes the matrix as a one-line JSON header followed by the raw
    /// little-endian f64 triangle.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = serde_json::json!({
            "version": 1,
            "n_days": self.n_days,
            "measure": self.measure,
        });
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let line = serde_json::to_string(&header).expect("header serializes");
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file_err = |detail: String| Error::MatrixFile {
            path: path.to_path_buf(),
            detail,
        };
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let header_end = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| file_err("missing header line".into()))?;
        #[derive(Deserialize)]
        struct Header {
            version: u32,
            n_days: usize,
            measure: Measure,
        }
        let header: Header = serde_json::from_slice(&bytes[..header_end])
            .map_err(|e| file_err(e.to_string()))?;
        if header.version != 1 {
            return Err(file_err(format!("unsupported version {}", header.version)));
        }
        let body = &bytes[header_end + 1..];
        let expected = condensed_len(header.n_days.max(1));
        if body.len() != expected * 8 {
            return Err(file_err(format!(
                "triangle holds {} bytes, expected {}",
                body.len(),
                expected * 8
            )));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        DissimilarityMatrix::from_condensed(header.n_days, header.measure, values)
    }
}

/// Pairwise L2 matrix over a slice of fields sharing one geometry.
pub fn pairwise_l2(fields: &[GridField]) -> Result<DissimilarityMatrix> {
    for (i, f) in fields.iter().enumerate().skip(1) {
        if f.geometry() != fields[0].geometry() {
            return Err(Error::GeometryMismatch {
                detail: format!("field {i} does not share the common grid"),
            });
        }
    }
    DissimilarityMatrix::compute(fields.len(), Measure::L2, |i, j| {
        l2_distance(&fields[i], &fields[j])
    })
}

/// Pairwise expert-deviation matrix over day signatures sharing zone and
/// bin counts.
pub fn pairwise_ed(signatures: &[DaySignature]) -> Result<DissimilarityMatrix> {
    if let Some(first) = signatures.first() {
        for s in &signatures[1..] {
            if s.n_zones() != first.n_zones() {
                return Err(Error::ZoneCountMismatch {
                    left: first.n_zones(),
                    right: s.n_zones(),
                });
            }
            if s.n_bins() != first.n_bins() {
                return Err(Error::BinCountMismatch {
                    left: first.n_bins(),
                    right: s.n_bins(),
                });
            }
        }
    }
    DissimilarityMatrix::compute(signatures.len(), Measure::Ed, |i, j| {
        expert_deviation(&signatures[i], &signatures[j])
    })
}
