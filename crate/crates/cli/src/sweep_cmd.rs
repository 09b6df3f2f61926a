//! `sweep`: mean silhouette across a k range, optionally for several
//! measures side by side, written as CSV plus an SVG plot. The
//! `--cross-measure` diagnostic additionally scores each measure's labels
//! against the other measure's matrix.

use std::fs;

use clap::Args;
use serde_json::json;

use edclust_core::dissim::Measure;
use edclust_core::eval::{silhouette, SweepPoint};
use edclust_core::stack_io::load_stack;

use crate::cluster_cmd::algorithm_label;
use crate::config::RunConfig;
use crate::errors::{CliError, CliResult};
use crate::opts::{parse_measure, CommonOpts};
use crate::pipeline::{self, Prepared};
use crate::report::{self, check_csv, check_svg, SweepSeries, SWEEP_HEADER};

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Comma-separated measures to sweep side by side, e.g. ED,L2
    /// (default: the configured measure)
    #[arg(long)]
    pub measures: Option<String>,

    /// Diagnostic: also score each measure's labels with the other
    /// measure's matrix (needs two measures)
    #[arg(long)]
    pub cross_measure: bool,
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    let flag_measures: Option<Vec<Measure>> = args
        .measures
        .as_deref()
        .map(|list| list.split(',').map(|s| parse_measure(s.trim())).collect())
        .transpose()?;
    let cfg = args.common.resolve_with(
        RunConfig {
            measures: flag_measures,
            ..RunConfig::default()
        },
        false,
        true,
    )?;
    let (lo, hi) = cfg.k_range.expect("resolver enforces k_range");
    let stack = load_stack(&cfg.input)?;
    let sha = cfg.sha256();
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out.display())))?;

    let measures: Vec<Measure> = cfg.measures.clone().unwrap_or_else(|| vec![cfg.measure]);

    let prepared: Vec<Prepared> = measures
        .iter()
        .map(|&m| pipeline::prepare(&cfg, &stack, m))
        .collect::<CliResult<_>>()?;

    let mut series: Vec<SweepSeries> = Vec::new();
    for p in &prepared {
        let points = pipeline::sweep(&cfg, &stack, p, lo, hi)?;
        series.push(make_series(
            algorithm_label(&cfg),
            p.measure.to_string(),
            points,
            lo,
        ));
    }

    if args.cross_measure {
        if prepared.len() < 2 {
            return Err(CliError::config(
                "--cross-measure needs two measures, e.g. --measures ED,L2",
            ));
        }
        for label_side in &prepared {
            for score_side in &prepared {
                if label_side.measure == score_side.measure {
                    continue;
                }
                let mut points = Vec::with_capacity(hi - lo + 1);
                for k in lo..=hi {
                    let labels = pipeline::labels_at_k(&cfg, &stack, label_side, k)?;
                    let report = silhouette(&score_side.matrix, &labels)?;
                    points.push(SweepPoint {
                        k,
                        mean_silhouette: report.mean,
                    });
                }
                series.push(make_series(
                    algorithm_label(&cfg),
                    format!("{}->{}", label_side.measure, score_side.measure),
                    points,
                    lo,
                ));
            }
        }
    }

    report::write_sweep_csv(&out.join("sweep.csv"), &sha, cfg.seed, &series)?;
    report::write_text(
        &out.join("sweep.svg"),
        &report::sweep_svg("mean silhouette across k", &series, &sha),
    )?;

    let rows = check_csv(&out.join("sweep.csv"), SWEEP_HEADER)?;
    let expected = series.len() * (hi - lo + 1);
    if rows != expected {
        return Err(CliError::internal(format!(
            "bundle check: sweep.csv has {rows} rows, expected {expected}"
        )));
    }
    check_svg(&out.join("sweep.svg"), &sha)?;

    let summary: Vec<serde_json::Value> = series
        .iter()
        .map(|s| {
            let best = s
                .points
                .iter()
                .find(|p| p.k == s.best_k)
                .expect("best k comes from the points");
            json!({
                "algorithm": s.algorithm,
                "measure": s.measure,
                "best_k": s.best_k,
                "best_mean_silhouette": best.mean_silhouette,
            })
        })
        .collect();
    report::print_line(
        &json!({
            "output_dir": out,
            "config_sha256": sha,
            "k_range": [lo, hi],
            "series": summary,
        })
        .to_string(),
    )
}

fn make_series(
    algorithm: &str,
    measure: String,
    points: Vec<SweepPoint>,
    fallback_k: usize,
) -> SweepSeries {
    let best_k = edclust_core::best_sweep_point(&points)
        .map(|p| p.k)
        .unwrap_or(fallback_k);
    SweepSeries {
        algorithm: algorithm.to_string(),
        measure,
        points,
        best_k,
    }
}
