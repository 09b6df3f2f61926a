//! Shared analysis plumbing: turns a loaded stack plus a resolved config
//! into the points and pairwise matrix the clustering commands consume.

use edclust_core::dissim::{pairwise_ed, pairwise_l2, DissimilarityMatrix, Measure};
use edclust_core::eval::k_sweep;
use edclust_core::grid::FieldStack;
use edclust_core::quantize::{signatures, DaySignature};
use edclust_core::{
    hac_dendrogram, hac_fit, kmeans_fit, Algorithm, ClusteringResult, KMeansConfig, L2Space,
    SignatureCentroid, SignatureSpace, VectorCentroid,
};

use crate::config::ResolvedConfig;
use crate::errors::{CliError, CliResult};

/// The day points for one measure. L2 clusters the raw fields (borrowed
/// from the stack); ED clusters derived per-day signatures.
pub enum Points {
    Fields,
    Signatures(Vec<DaySignature>),
}

pub struct Prepared {
    pub measure: Measure,
    pub points: Points,
    pub matrix: DissimilarityMatrix,
}

/// Builds the measure-appropriate representation and pairwise matrix.
pub fn prepare(cfg: &ResolvedConfig, stack: &FieldStack, measure: Measure) -> CliResult<Prepared> {
    match measure {
        Measure::L2 => Ok(Prepared {
            measure,
            points: Points::Fields,
            matrix: pairwise_l2(stack.days())?,
        }),
        Measure::Ed => {
            let edges = cfg.edges()?.ok_or_else(|| {
                CliError::config("measure ED needs bin edges (config `preset` or --preset)")
            })?;
            let partition = cfg.partition(stack.geometry())?;
            let sigs = signatures(stack, &partition, &edges, cfg.epsilon)?;
            let matrix = pairwise_ed(&sigs)?;
            Ok(Prepared {
                measure,
                points: Points::Signatures(sigs),
                matrix,
            })
        }
    }
}

/// The measure-independent part of a fit, plus the centroids in whichever
/// shape the measure produced.
pub struct Fit {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub representatives: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: Option<u64>,
    pub objective: f64,
    pub step_objectives: Vec<(f64, f64)>,
    pub centroids: Centroids,
}

pub enum Centroids {
    Fields(Vec<VectorCentroid>),
    Signatures(Vec<SignatureCentroid>),
}

fn split<C>(result: ClusteringResult<C>) -> (ClusteringResult<()>, Vec<C>) {
    let ClusteringResult {
        k,
        assignments,
        centroids,
        representatives,
        iterations,
        converged,
        seed,
        objective,
        step_objectives,
    } = result;
    (
        ClusteringResult {
            k,
            assignments,
            centroids: Vec::new(),
            representatives,
            iterations,
            converged,
            seed,
            objective,
            step_objectives,
        },
        centroids,
    )
}

/// Runs the configured algorithm at one k over an already-prepared dataset.
pub fn fit(
    cfg: &ResolvedConfig,
    stack: &FieldStack,
    prepared: &Prepared,
    k: usize,
) -> CliResult<Fit> {
    let algorithm = cfg.algorithm_for_core();
    let kms = KMeansConfig {
        k,
        seed: cfg.seed,
        max_iter: cfg.max_iter,
        restarts: cfg.restarts,
    };
    let (core, centroids) = match &prepared.points {
        Points::Fields => {
            let space = L2Space;
            let result = match algorithm {
                Algorithm::Kms => kmeans_fit(&space, stack.days(), &kms)?,
                Algorithm::Hac(linkage) => {
                    hac_fit(&space, stack.days(), &prepared.matrix, k, linkage)?
                }
            };
            let (core, centroids) = split(result);
            (core, Centroids::Fields(centroids))
        }
        Points::Signatures(sigs) => {
            let space = SignatureSpace::new(cfg.epsilon);
            let result = match algorithm {
                Algorithm::Kms => kmeans_fit(&space, sigs, &kms)?,
                Algorithm::Hac(linkage) => hac_fit(&space, sigs, &prepared.matrix, k, linkage)?,
            };
            let (core, centroids) = split(result);
            (core, Centroids::Signatures(centroids))
        }
    };
    Ok(Fit {
        k: core.k,
        assignments: core.assignments,
        representatives: core.representatives,
        iterations: core.iterations,
        converged: core.converged,
        seed: core.seed,
        objective: core.objective,
        step_objectives: core.step_objectives,
        centroids,
    })
}

/// Mean-silhouette sweep over an inclusive k range, under the prepared
/// measure and the configured algorithm.
pub fn sweep(
    cfg: &ResolvedConfig,
    stack: &FieldStack,
    prepared: &Prepared,
    k_min: usize,
    k_max: usize,
) -> CliResult<Vec<edclust_core::SweepPoint>> {
    let base = KMeansConfig {
        k: k_min,
        seed: cfg.seed,
        max_iter: cfg.max_iter,
        restarts: cfg.restarts,
    };
    let algorithm = cfg.algorithm_for_core();
    let points = match &prepared.points {
        Points::Fields => k_sweep(
            &L2Space,
            stack.days(),
            &prepared.matrix,
            algorithm,
            k_min,
            k_max,
            &base,
        )?,
        Points::Signatures(sigs) => k_sweep(
            &SignatureSpace::new(cfg.epsilon),
            sigs,
            &prepared.matrix,
            algorithm,
            k_min,
            k_max,
            &base,
        )?,
    };
    Ok(points)
}

/// Labels at one k under the prepared measure — used by the cross-measure
/// diagnostic, which scores one measure's labels with the other's matrix.
pub fn labels_at_k(
    cfg: &ResolvedConfig,
    stack: &FieldStack,
    prepared: &Prepared,
    k: usize,
) -> CliResult<Vec<usize>> {
    match cfg.algorithm_for_core() {
        Algorithm::Kms => Ok(fit(cfg, stack, prepared, k)?.assignments),
        Algorithm::Hac(linkage) => {
            let dendrogram = hac_dendrogram(&prepared.matrix, linkage)?;
            Ok(dendrogram.cut(k)?)
        }
    }
}
