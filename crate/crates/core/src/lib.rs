//! Clustering of daily gridded scalar fields, comparing plain Euclidean
//! distance with a zone-histogram divergence.
//!
//! The pipeline: load a [`grid::FieldStack`] of daily grids, cut each day
//! into [`grid::ZonePartition`] zones, quantize every zone onto shared
//! [`quantize::BinEdges`] to get smoothed histograms, and compare days
//! either cell-by-cell (L2) or zone-by-zone through symmetrized
//! Kullback-Leibler divergence (the expert deviation). Both measures feed
//! the same K-means and agglomerative backends, silhouette scoring, and
//! representative-day extraction.

pub mod cluster;
pub mod dissim;
pub mod error;
pub mod eval;
pub mod grid;
pub mod quantize;
pub mod stack_io;

pub use cluster::{
    hac_dendrogram, hac_fit, kmeans_fit, representative_elements, Algorithm, ClusterSpace,
    ClusteringResult, Dendrogram, KMeansConfig, L2Space, Linkage, LinkageName, SignatureCentroid,
    SignatureSpace, VectorCentroid,
};
pub use dissim::{
    expert_deviation, kl_divergence, kls_divergence, l2_distance, pairwise_ed, pairwise_l2,
    DissimilarityMatrix, Measure,
};
pub use error::{Error, Result};
pub use eval::{
    adjusted_rand_index, best_sweep_point, k_sweep, monthly_distribution, silhouette,
    MonthlyDistribution, SilhouetteReport, SweepPoint,
};
pub use grid::{
    extract_zone, wind_speed_from_components, FieldStack, GridField, GridGeometry, ZonePartition,
    ZoneRect,
};
pub use quantize::{quantize, signature, signatures, BinEdges, DaySignature, Histogram};
pub use stack_io::{load_stack, save_stack, save_stack_with, stack_from_csv_days, MissingSentinel};
