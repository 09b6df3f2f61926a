//! `cluster`: fits the configured algorithm to a stack and writes the full
//! output bundle — result JSON, representative-day stack, silhouette and
//! monthly CSVs, centroid payloads, and (when a k range is configured) the
//! sweep CSV/SVG. Exits 0 only after every artifact re-validates.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use clap::Args;
use serde_json::json;

use edclust_core::eval::{monthly_distribution, silhouette};
use edclust_core::grid::FieldStack;
use edclust_core::stack_io::{load_stack, save_stack_with, MissingSentinel};

use crate::config::ResolvedConfig;
use crate::errors::{CliError, CliResult};
use crate::opts::CommonOpts;
use crate::pipeline::{self, Centroids, Fit};
use crate::report::{
    self, check_csv, check_svg, write_json, MONTHLY_HEADER, SILHOUETTE_HEADER, SWEEP_HEADER,
};

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: CommonOpts,
}

pub fn run(args: &ClusterArgs) -> CliResult<()> {
    let cfg = args.common.resolve(true, false)?;
    let stack = load_stack(&cfg.input)?;
    let k = cfg.k.expect("resolver enforces k");
    let sha = cfg.sha256();
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out.display())))?;

    let prepared = pipeline::prepare(&cfg, &stack, cfg.measure)?;
    let fit = pipeline::fit(&cfg, &stack, &prepared, k)?;
    let dates: Vec<NaiveDate> = stack.dates().collect();

    // Silhouette needs at least two clusters; k=1 runs skip it honestly.
    let sil = if k >= 2 {
        Some(silhouette(&prepared.matrix, &fit.assignments)?)
    } else {
        None
    };
    let monthly = monthly_distribution(&fit.assignments, k, &dates)?;

    write_representatives(&stack, &fit, &out, &sha)?;
    write_centroids(&stack, &fit, &out, &sha)?;
    {
        let per_sample: &[f64] = sil.as_ref().map(|r| r.per_sample.as_slice()).unwrap_or(&[]);
        let dates_for_csv = if sil.is_some() { dates.as_slice() } else { &[] };
        let labels_for_csv = if sil.is_some() { fit.assignments.as_slice() } else { &[] };
        report::write_silhouette_csv(
            &out.join("silhouette.csv"),
            &sha,
            cfg.seed,
            dates_for_csv,
            labels_for_csv,
            per_sample,
        )?;
    }
    report::write_monthly_csv(&out.join("monthly.csv"), &sha, cfg.seed, &monthly)?;

    let sweep_rows = if let Some((lo, hi)) = cfg.k_range {
        let points = pipeline::sweep(&cfg, &stack, &prepared, lo, hi)?;
        let best_k = edclust_core::best_sweep_point(&points)
            .map(|p| p.k)
            .unwrap_or(lo);
        let series = vec![report::SweepSeries {
            algorithm: algorithm_label(&cfg).to_string(),
            measure: prepared.measure.to_string(),
            points,
            best_k,
        }];
        report::write_sweep_csv(&out.join("sweep.csv"), &sha, cfg.seed, &series)?;
        report::write_text(
            &out.join("sweep.svg"),
            &report::sweep_svg("mean silhouette across k", &series, &sha),
        )?;
        Some(hi - lo + 1)
    } else {
        None
    };

    write_result_json(&cfg, &stack, &fit, sil.as_ref(), &dates, &sha, &out)?;

    validate_bundle(&out, &sha, stack.len(), k, sil.is_some(), sweep_rows)?;

    let mean_sil = sil.as_ref().map(|r| r.mean);
    log::info!(
        "clustered {} days into {} clusters ({} / {})",
        stack.len(),
        k,
        algorithm_label(&cfg),
        cfg.measure
    );
    report::print_line(
        &json!({
            "output_dir": out,
            "config_sha256": sha,
            "k": k,
            "measure": cfg.measure.to_string(),
            "algorithm": algorithm_label(&cfg),
            "mean_silhouette": mean_sil,
            "objective": fit.objective,
        })
        .to_string(),
    )
}

pub fn algorithm_label(cfg: &ResolvedConfig) -> &'static str {
    match cfg.algorithm {
        crate::config::AlgorithmName::Kms => "KMS",
        crate::config::AlgorithmName::Hac => "HAC",
    }
}

/// The representative days as a real mini-stack: actual dataset fields,
/// date-ordered, reloadable by `load_stack`.
fn write_representatives(
    stack: &FieldStack,
    fit: &Fit,
    out: &Path,
    sha: &str,
) -> CliResult<()> {
    let mut indices = fit.representatives.clone();
    indices.sort_unstable();
    let days = indices.iter().map(|&i| stack.day(i).clone()).collect();
    let mini = FieldStack::new(*stack.geometry(), stack.variable(), stack.units(), days)?;
    save_stack_with(
        &mini,
        &out.join("representatives.json"),
        MissingSentinel::Nan,
        Some(json!({
            "config_sha256": sha,
            "role": "representatives",
            "source_day_indices": indices,
        })),
    )?;
    Ok(())
}

fn write_centroids(stack: &FieldStack, fit: &Fit, out: &Path, sha: &str) -> CliResult<()> {
    let value = match &fit.centroids {
        Centroids::Fields(centroids) => {
            let geom = stack.geometry();
            let payload = out.join("centroids.f32le");
            let mut bytes = Vec::with_capacity(centroids.len() * geom.n_cells() * 4);
            for c in centroids {
                for &v in c.values() {
                    bytes.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            fs::write(&payload, bytes)
                .map_err(|e| CliError::data(format!("cannot write {}: {e}", payload.display())))?;
            json!({
                "kind": "fields",
                "k": centroids.len(),
                "n_rows": geom.n_rows,
                "n_cols": geom.n_cols,
                "dtype": "f32le",
                "payload_file": "centroids.f32le",
                "config_sha256": sha,
            })
        }
        Centroids::Signatures(centroids) => {
            let zones: Vec<serde_json::Value> = centroids
                .iter()
                .map(|c| {
                    c.zone_histograms()
                        .iter()
                        .map(|h| json!({"probs": h.probs(), "count": h.count()}))
                        .collect()
                })
                .collect();
            json!({
                "kind": "signatures",
                "k": centroids.len(),
                "n_zones": centroids.first().map(|c| c.zone_histograms().len()).unwrap_or(0),
                "config_sha256": sha,
                "centroids": zones,
            })
        }
    };
    write_json(&out.join("centroids.json"), &value)
}

fn write_result_json(
    cfg: &ResolvedConfig,
    stack: &FieldStack,
    fit: &Fit,
    sil: Option<&edclust_core::SilhouetteReport>,
    dates: &[NaiveDate],
    sha: &str,
    out: &Path,
) -> CliResult<()> {
    let mut sizes = vec![0usize; fit.k];
    for &a in &fit.assignments {
        sizes[a] += 1;
    }
    let representatives: Vec<serde_json::Value> = fit
        .representatives
        .iter()
        .enumerate()
        .map(|(cluster, &day)| {
            json!({
                "cluster": cluster,
                "day_index": day,
                "date": dates[day].to_string(),
            })
        })
        .collect();
    let silhouette_value = match sil {
        Some(r) => json!({
            "mean": r.mean,
            "per_cluster_mean": r.per_cluster_mean,
            "k": r.k,
            "measure": r.measure.to_string(),
        }),
        None => serde_json::Value::Null,
    };
    let mut files = json!({
        "silhouette_csv": "silhouette.csv",
        "monthly_csv": "monthly.csv",
        "representatives": "representatives.json",
        "centroids": "centroids.json",
    });
    if cfg.k_range.is_some() {
        files["sweep_csv"] = json!("sweep.csv");
        files["sweep_svg"] = json!("sweep.svg");
    }
    let config_value = serde_json::to_value(cfg)
        .map_err(|e| CliError::internal(format!("serializing config: {e}")))?;
    let value = json!({
        "config": config_value,
        "config_sha256": sha,
        "n_days": stack.len(),
        "k": fit.k,
        "measure": cfg.measure.to_string(),
        "algorithm": algorithm_label(cfg),
        "seed": cfg.seed,
        "winning_restart_seed": fit.seed,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "objective": fit.objective,
        "step_objectives": fit.step_objectives,
        "assignments": fit.assignments,
        "cluster_sizes": sizes,
        "representatives": representatives,
        "silhouette": silhouette_value,
        "files": files,
    });
    write_json(&out.join("result.json"), &value)
}

/// Re-reads everything just written and cross-checks the pieces against
/// each other; any failure is an internal error (exit 4), and the command
/// only reports success after this passes.
fn validate_bundle(
    out: &Path,
    sha: &str,
    n_days: usize,
    k: usize,
    has_silhouette: bool,
    sweep_rows: Option<usize>,
) -> CliResult<()> {
    let result_path = out.join("result.json");
    let text = fs::read_to_string(&result_path).map_err(|e| {
        CliError::internal(format!("bundle check: cannot re-read {}: {e}", result_path.display()))
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        CliError::internal(format!("bundle check: {} is not JSON: {e}", result_path.display()))
    })?;
    if value["config_sha256"].as_str() != Some(sha) {
        return Err(CliError::internal(
            "bundle check: result.json carries the wrong config hash",
        ));
    }
    let n_assign = value["assignments"].as_array().map(Vec::len).unwrap_or(0);
    if n_assign != n_days {
        return Err(CliError::internal(format!(
            "bundle check: result.json has {n_assign} assignments for {n_days} days"
        )));
    }
    let n_reps = value["representatives"].as_array().map(Vec::len).unwrap_or(0);
    if n_reps != k {
        return Err(CliError::internal(format!(
            "bundle check: result.json has {n_reps} representatives for k={k}"
        )));
    }

    let reps = load_stack(&out.join("representatives.json"))
        .map_err(|e| CliError::internal(format!("bundle check: representative stack: {e}")))?;
    if reps.len() != k {
        return Err(CliError::internal(format!(
            "bundle check: representative stack holds {} days for k={k}",
            reps.len()
        )));
    }

    let sil_rows = check_csv(&out.join("silhouette.csv"), SILHOUETTE_HEADER)?;
    let expected_sil = if has_silhouette { n_days } else { 0 };
    if sil_rows != expected_sil {
        return Err(CliError::internal(format!(
            "bundle check: silhouette.csv has {sil_rows} rows, expected {expected_sil}"
        )));
    }
    let monthly_rows = check_csv(&out.join("monthly.csv"), MONTHLY_HEADER)?;
    if monthly_rows != k * 12 {
        return Err(CliError::internal(format!(
            "bundle check: monthly.csv has {monthly_rows} rows, expected {}",
            k * 12
        )));
    }

    let centroids_path = out.join("centroids.json");
    let ctext = fs::read_to_string(&centroids_path).map_err(|e| {
        CliError::internal(format!("bundle check: cannot re-read {}: {e}", centroids_path.display()))
    })?;
    let cvalue: serde_json::Value = serde_json::from_str(&ctext).map_err(|e| {
        CliError::internal(format!("bundle check: {} is not JSON: {e}", centroids_path.display()))
    })?;
    if cvalue["kind"] == "fields" {
        let cells = cvalue["n_rows"].as_u64().unwrap_or(0) * cvalue["n_cols"].as_u64().unwrap_or(0);
        let expected = cvalue["k"].as_u64().unwrap_or(0) * cells * 4;
        let payload = out.join("centroids.f32le");
        let size = fs::metadata(&payload)
            .map_err(|e| CliError::internal(format!("bundle check: {}: {e}", payload.display())))?
            .len();
        if size != expected {
            return Err(CliError::internal(format!(
                "bundle check: centroid payload is {size} bytes, expected {expected}"
            )));
        }
    } else if cvalue["centroids"].as_array().map(Vec::len) != Some(k) {
        return Err(CliError::internal(
            "bundle check: centroids.json does not hold k centroids",
        ));
    }

    if let Some(expected) = sweep_rows {
        let rows = check_csv(&out.join("sweep.csv"), SWEEP_HEADER)?;
        if rows != expected {
            return Err(CliError::internal(format!(
                "bundle check: sweep.csv has {rows} rows, expected {expected}"
            )));
        }
        check_svg(&out.join("sweep.svg"), sha)?;
    }
    Ok(())
}
