//! Evaluation utilities: silhouette scoring, label agreement, seasonal
//! cluster distributions, k sweeps, and synthetic data generators used to
//! exercise and contrast the dissimilarity measures.

mod metrics;
mod sweep;
pub mod synthetic;

pub use metrics::{
    adjusted_rand_index, monthly_distribution, silhouette, MonthlyDistribution, SilhouetteReport,
};
pub use sweep::{best_sweep_point, k_sweep, SweepPoint};
