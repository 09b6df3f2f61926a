use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {detail}")]
    Manifest { path: PathBuf, detail: String },

    #[error(
        "payload {path} holds {actual} values but the manifest requires {expected}; \
         day {day_index} is truncated"
    )]
    PayloadSize {
        path: PathBuf,
        expected: usize,
        actual: usize,
        day_index: usize,
    },

    #[error("bad value at day {day_index}, cell {cell}: {detail}")]
    BadValue {
        day_index: usize,
        cell: usize,
        detail: String,
    },

    #[error("dates are not strictly increasing at day {day_index}")]
    DatesNotIncreasing { day_index: usize },

    #[error("invalid grid geometry: {detail}")]
    Geometry { detail: String },

    #[error("geometry mismatch: {detail}")]
    GeometryMismatch { detail: String },

    #[error("date mismatch between stacks at day {day_index}")]
    DateMismatch { day_index: usize },

    #[error("invalid zone partition: {detail}")]
    Partition { detail: String },

    #[error("zone index {zone_index} out of range (partition has {zone_count} zones)")]
    ZoneOutOfRange {
        zone_index: usize,
        zone_count: usize,
    },

    #[error("csv {path}, line {line}: {detail}")]
    Csv {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("invalid bin edges: {detail}")]
    Edges { detail: String },

    #[error("empty reference set: no usable values to derive quantile edges from")]
    EmptyReference,

    #[error("histogram bin counts differ: {left} vs {right}")]
    BinCountMismatch { left: usize, right: usize },

    #[error("q has zero mass in bin {bin} where p does not; smooth histograms first")]
    ZeroBin { bin: usize },

    #[error("signature zone counts differ: {left} vs {right}")]
    ZoneCountMismatch { left: usize, right: usize },

    #[error("matrix file {path}: {detail}")]
    MatrixFile { path: PathBuf, detail: String },

    #[error("{requested} is incompatible with dissimilarities computed under {actual}")]
    MeasureMismatch { requested: String, actual: String },

    #[error("k = {k} is out of range for {n} samples")]
    InvalidK { k: usize, n: usize },

    #[error("assignments cover {actual} samples, expected {expected}")]
    AssignmentLength { expected: usize, actual: usize },

    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },

    #[error("silhouette is undefined for a single cluster")]
    SingleCluster,

    #[error("invalid synthetic spec: {detail}")]
    Synthetic { detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
