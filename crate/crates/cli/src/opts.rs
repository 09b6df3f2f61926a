//! Flags shared by the analysis subcommands, and their merge with a
//! `--config` JSON file into a [`ResolvedConfig`]. Flags win over the file.

use std::path::PathBuf;

use clap::Args;

use edclust_core::cluster::LinkageName;
use edclust_core::dissim::Measure;

use crate::config::{AlgorithmName, PresetSpec, ResolvedConfig, RunConfig, ZonesSpec};
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct CommonOpts {
    /// JSON run-config file; any flag below overrides its field
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Stack manifest to analyze
    #[arg(long, short = 'i')]
    pub input: Option<PathBuf>,

    /// Dissimilarity measure: L2 or ED
    #[arg(long)]
    pub measure: Option<String>,

    /// Bin-edge preset name (rainfall_table1, beaufort); inline edges go in the config file
    #[arg(long)]
    pub preset: Option<String>,

    /// Zone layout name; rectangle lists go in the config file
    #[arg(long)]
    pub zones: Option<String>,

    /// Clustering algorithm: KMS or HAC
    #[arg(long)]
    pub algorithm: Option<String>,

    /// HAC linkage: single, complete, average, or ward
    #[arg(long)]
    pub linkage: Option<String>,

    /// Number of clusters
    #[arg(long, short = 'k')]
    pub k: Option<usize>,

    /// Inclusive sweep range, e.g. 2,8
    #[arg(long, value_name = "LO,HI")]
    pub k_range: Option<String>,

    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,

    /// Independent KMS restarts; the best objective wins
    #[arg(long)]
    pub restarts: Option<usize>,

    /// Histogram smoothing floor
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// KMS iteration cap
    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Directory the output bundle is written into
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
}

pub fn parse_measure(text: &str) -> CliResult<Measure> {
    match text.to_ascii_uppercase().as_str() {
        "L2" => Ok(Measure::L2),
        "ED" => Ok(Measure::Ed),
        other => Err(CliError::config(format!(
            "unknown measure '{other}' (expected L2 or ED)"
        ))),
    }
}

pub fn parse_algorithm(text: &str) -> CliResult<AlgorithmName> {
    match text.to_ascii_uppercase().as_str() {
        "KMS" => Ok(AlgorithmName::Kms),
        "HAC" => Ok(AlgorithmName::Hac),
        other => Err(CliError::config(format!(
            "unknown algorithm '{other}' (expected KMS or HAC)"
        ))),
    }
}

pub fn parse_linkage(text: &str) -> CliResult<LinkageName> {
    match text.to_ascii_lowercase().as_str() {
        "single" => Ok(LinkageName::Single),
        "complete" => Ok(LinkageName::Complete),
        "average" => Ok(LinkageName::Average),
        "ward" => Ok(LinkageName::Ward),
        other => Err(CliError::config(format!(
            "unknown linkage '{other}' (expected single, complete, average, or ward)"
        ))),
    }
}

pub fn parse_k_range(text: &str) -> CliResult<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::config(format!(
            "bad k range '{text}' (expected LO,HI)"
        )));
    }
    let lo = parts[0]
        .parse()
        .map_err(|e| CliError::config(format!("bad k range '{text}': {e}")))?;
    let hi = parts[1]
        .parse()
        .map_err(|e| CliError::config(format!("bad k range '{text}': {e}")))?;
    Ok((lo, hi))
}

impl CommonOpts {
    fn overrides(&self) -> CliResult<RunConfig> {
        Ok(RunConfig {
            input: self.input.clone(),
            preset: self.preset.clone().map(PresetSpec::Name),
            zones: self.zones.clone().map(ZonesSpec::Named),
            measure: self.measure.as_deref().map(parse_measure).transpose()?,
            measures: None,
            algorithm: self.algorithm.as_deref().map(parse_algorithm).transpose()?,
            linkage: self.linkage.as_deref().map(parse_linkage).transpose()?,
            k: self.k,
            k_range: self.k_range.as_deref().map(parse_k_range).transpose()?,
            seed: self.seed,
            restarts: self.restarts,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            output_dir: self.output_dir.clone(),
        })
    }

    /// File values merged with flag overrides, settled into an effective run.
    pub fn resolve(&self, need_k: bool, need_k_range: bool) -> CliResult<ResolvedConfig> {
        self.resolve_with(RunConfig::default(), need_k, need_k_range)
    }

    /// Like [`CommonOpts::resolve`], with subcommand-specific flags merged in
    /// at the same precedence as the shared flags.
    pub fn resolve_with(
        &self,
        extra: RunConfig,
        need_k: bool,
        need_k_range: bool,
    ) -> CliResult<ResolvedConfig> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        ResolvedConfig::from_run(
            file.merge(self.overrides()?).merge(extra),
            need_k,
            need_k_range,
        )
    }
}
