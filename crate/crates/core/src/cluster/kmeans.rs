//! Lloyd-style K-means over any [`ClusterSpace`], with D²-weighted seeding,
//! deterministic tie-breaking, empty-cluster repair, and multiple restarts.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cluster::{
    cluster_members, labeling_objective, representative_elements, ClusterSpace, ClusteringResult,
};
use crate::error::{Error, Result};

/// K-means controls. `seed` feeds restart `r` with `seed + r`, so a run is
/// reproduced exactly by (data, config).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            max_iter: 100,
            restarts: 8,
        }
    }
}

/// Draws an index proportionally to `weights`; `None` when all weights
/// vanish. Zero-weight indices are never drawn.
fn sample_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    // Also bail on a NaN total, which a plain `<= 0.0` would let through.
    let drawable = total.is_finite() && total > 0.0;
    if !drawable {
        return None;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    last
}

/// D²-weighted seeding: the first centre is uniform, each further centre is
/// drawn with probability proportional to the squared dissimilarity to the
/// nearest centre chosen so far. When every remaining point coincides with
/// a chosen centre, the fallback is uniform over the unchosen indices.
pub(crate) fn seed_indices<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = points.len();
    debug_assert!(k >= 1 && k <= n);
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    is_chosen[first] = true;
    let mut min_d2: Vec<f64> = points
        .iter()
        .map(|p| {
            let d = space.point_dissimilarity(p, &points[first]);
            d * d
        })
        .collect();
    while chosen.len() < k {
        let next = match sample_weighted(rng, &min_d2) {
            Some(i) => i,
            None => {
                let unchosen: Vec<usize> = (0..n).filter(|&i| !is_chosen[i]).collect();
                unchosen[rng.random_range(0..unchosen.len())]
            }
        };
        chosen.push(next);
        is_chosen[next] = true;
        for (i, slot) in min_d2.iter_mut().enumerate() {
            let d = space.point_dissimilarity(&points[i], &points[next]);
            *slot = slot.min(d * d);
        }
    }
    chosen
}

/// Nearest-centroid label and distance per point; ties keep the lowest
/// cluster index.
fn assign<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    centroids: &[S::Centroid],
) -> (Vec<usize>, Vec<f64>) {
    let labeled: Vec<(usize, f64)> = points
        .par_iter()
        .map(|p| {
            let mut best = (0usize, f64::INFINITY);
            for (c, centroid) in centroids.iter().enumerate() {
                let d = space.dissimilarity(p, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .collect();
    labeled.into_iter().unzip()
}

/// Gives every empty cluster the point farthest from its current centroid,
/// among points whose departure leaves their own cluster non-empty. Ties
/// take the lowest day index; empty clusters are filled in ascending order.
fn repair_empty<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    centroids: &[S::Centroid],
    assignments: &mut [usize],
    dists: &mut [f64],
) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    while let Some(empty) = (0..k).find(|&c| sizes[c] == 0) {
        let mut best: Option<(usize, f64)> = None;
        for (day, &a) in assignments.iter().enumerate() {
            if sizes[a] < 2 {
                continue;
            }
            let d = dists[day];
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((day, d));
            }
        }
        let (day, _) = best.expect("some cluster has at least two members when k <= n");
        sizes[assignments[day]] -= 1;
        assignments[day] = empty;
        sizes[empty] = 1;
        dists[day] = space.dissimilarity(&points[day], &centroids[empty]);
    }
}

fn run_single<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    cfg: &KMeansConfig,
    seed: u64,
) -> Result<ClusteringResult<S::Centroid>> {
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = seed_indices(space, points, k, &mut rng);
    let mut centroids: Vec<S::Centroid> =
        seeds.iter().map(|&i| space.centroid_from_point(&points[i])).collect();

    let (mut assignments, mut dists) = assign(space, points, &centroids);
    repair_empty(space, points, &centroids, &mut assignments, &mut dists);
    let mut step_objectives = Vec::new();
    let mut iterations = 1;
    let mut converged = false;

    for _ in 1..cfg.max_iter {
        let members = cluster_members(&assignments, k);
        for (c, member_days) in members.iter().enumerate() {
            centroids[c] = space.centroid(points, member_days)?;
        }
        let before = labeling_objective(space, points, &centroids, &assignments);
        let (mut new_assignments, mut new_dists) = assign(space, points, &centroids);
        let after: f64 = new_dists.iter().sum();
        step_objectives.push((before, after));
        repair_empty(space, points, &centroids, &mut new_assignments, &mut new_dists);
        iterations += 1;
        let unchanged = new_assignments == assignments;
        assignments = new_assignments;
        dists = new_dists;
        if unchanged {
            converged = true;
            break;
        }
    }
    let _ = dists;

    // Leave the result self-consistent even when the iteration cap cut the
    // loop short: centroids always describe the final labeling.
    let members = cluster_members(&assignments, k);
    for (c, member_days) in members.iter().enumerate() {
        centroids[c] = space.centroid(points, member_days)?;
    }
    let objective = labeling_objective(space, points, &centroids, &assignments);
    let representatives = representative_elements(space, points, &assignments, &centroids)?;
    Ok(ClusteringResult {
        k,
        assignments,
        centroids,
        representatives,
        iterations,
        converged,
        seed: Some(seed),
        objective,
        step_objectives,
    })
}

/// Runs `cfg.restarts` independent K-means fits (restart `r` seeded with
/// `cfg.seed + r`) and keeps the lowest final objective, preferring the
/// earlier restart on exact ties.
pub fn kmeans_fit<S: ClusterSpace>(
    space: &S,
    points: &[S::Point],
    cfg: &KMeansConfig,
) -> Result<ClusteringResult<S::Centroid>> {
    let n = points.len();
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::InvalidK { k: cfg.k, n });
    }
    if cfg.max_iter == 0 || cfg.restarts == 0 {
        return Err(Error::InvalidK { k: cfg.k, n });
    }
    space.validate_points(points)?;
    let runs: Vec<ClusteringResult<S::Centroid>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_single(space, points, cfg, cfg.seed.wrapping_add(r as u64)))
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, candidate| {
            if candidate.objective < best.objective {
                candidate
            } else {
                best
            }
        })
        .expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::L2Space;
    use crate::grid::{GridField, GridGeometry};

    fn scalar_points(values: &[f32]) -> Vec<GridField> {
        let geom = GridGeometry::index_grid(1, 1).unwrap();
        values
            .iter()
            .enumerate()
            .map(|(d, &v)| {
                GridField::new(
                    geom,
                    chrono::NaiveDate::from_ymd_opt(2002, 1, 1)
                        .unwrap()
                        .checked_add_days(chrono::Days::new(d as u64))
                        .unwrap(),
                    vec![v],
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn recovers_two_separated_groups() {
        let points = scalar_points(&[0.0, 0.2, 0.1, 10.0, 10.3, 9.9]);
        let cfg = KMeansConfig::new(2, 7);
        let result = kmeans_fit(&L2Space, &points, &cfg).unwrap();
        assert!(result.converged);
        let a = result.assignments.clone();
        assert_eq!(a[0], a[1]);
        assert_eq!(a[0], a[2]);
        assert_eq!(a[3], a[4]);
        assert_eq!(a[3], a[5]);
        assert_ne!(a[0], a[3]);
        // representative of the low group is the day nearest 0.1
        let low_cluster = a[0];
        assert_eq!(result.representatives[low_cluster], 2);
    }

    #[test]
    fn k_equals_one_and_k_equals_n() {
        let points = scalar_points(&[1.0, 2.0, 4.0, 8.0]);
        let one = kmeans_fit(&L2Space, &points, &KMeansConfig::new(1, 3)).unwrap();
        assert_eq!(one.assignments, vec![0, 0, 0, 0]);
        assert!(one.converged);
        let full = kmeans_fit(&L2Space, &points, &KMeansConfig::new(4, 3)).unwrap();
        let mut labels = full.assignments.clone();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(labels.len(), 4);
        assert_eq!(full.objective, 0.0);
    }

    #[test]
    fn rejects_bad_k() {
        let points = scalar_points(&[1.0, 2.0]);
        assert!(matches!(
            kmeans_fit(&L2Space, &points, &KMeansConfig::new(0, 1)).unwrap_err(),
            Error::InvalidK { k: 0, n: 2 }
        ));
        assert!(matches!(
            kmeans_fit(&L2Space, &points, &KMeansConfig::new(3, 1)).unwrap_err(),
            Error::InvalidK { k: 3, n: 2 }
        ));
    }

    #[test]
    fn identical_points_stay_stable() {
        let points = scalar_points(&[5.0; 6]);
        let result = kmeans_fit(&L2Space, &points, &KMeansConfig::new(3, 11)).unwrap();
        assert_eq!(result.objective, 0.0);
        assert!(result.converged);
        // every cluster kept at least one member through repair
        let mut sizes = [0usize; 3];
        for &a in &result.assignments {
            sizes[a] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0));
    }

    #[test]
    fn relabeling_never_raises_the_objective() {
        let values: Vec<f32> = (0..40).map(|i| ((i * 37 + 11) % 23) as f32 * 0.5).collect();
        let points = scalar_points(&values);
        for seed in 0..5 {
            let result = kmeans_fit(&L2Space, &points, &KMeansConfig::new(4, seed)).unwrap();
            for &(before, after) in &result.step_objectives {
                assert!(
                    after <= before + 1e-12,
                    "relabeling raised the objective: {before} -> {after}"
                );
            }
        }
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let values: Vec<f32> = (0..30).map(|i| ((i * 13 + 5) % 17) as f32).collect();
        let points = scalar_points(&values);
        let cfg = KMeansConfig::new(3, 42);
        let a = kmeans_fit(&L2Space, &points, &cfg).unwrap();
        let b = kmeans_fit(&L2Space, &points, &cfg).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.seed, b.seed);
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let values: Vec<f32> = (0..25).map(|i| ((i * 7 + 3) % 19) as f32).collect();
        let points = scalar_points(&values);
        let cfg = KMeansConfig::new(3, 9);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| kmeans_fit(&L2Space, &points, &cfg))
            .unwrap();
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| kmeans_fit(&L2Space, &points, &cfg))
            .unwrap();
        assert_eq!(single.assignments, multi.assignments);
        assert_eq!(single.objective.to_bits(), multi.objective.to_bits());
    }

    #[test]
    fn seeding_mass_follows_squared_distance() {
        // one far outlier among a tight clump: with D^2 weighting the
        // second seed lands on the outlier almost always
        let mut values = vec![0.0f32, 0.1, 0.2, 0.3, 0.4];
        values.push(100.0);
        let points = scalar_points(&values);
        let mut hits = 0;
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seeds = seed_indices(&L2Space, &points, 2, &mut rng);
            if seeds.contains(&5) {
                hits += 1;
            }
        }
        assert!(hits > 900, "outlier seeded only {hits}/1000 times");
    }

    #[test]
    fn seeding_handles_duplicates_with_uniform_fallback() {
        let points = scalar_points(&[2.0, 2.0, 2.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seeds = seed_indices(&L2Space, &points, 4, &mut rng);
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 4, "seeds must be distinct: {seeds:?}");
    }
}
