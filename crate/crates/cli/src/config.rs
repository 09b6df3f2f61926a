//! Run configuration: a JSON file with a strict schema, overridable by
//! command-line flags, resolved against the input stack, echoed into every
//! output together with its SHA-256 hash.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use edclust_core::cluster::LinkageName;
use edclust_core::dissim::Measure;
use edclust_core::grid::{GridGeometry, ZonePartition, ZoneRect};
use edclust_core::quantize::BinEdges;
use edclust_core::{Algorithm, Linkage};

use crate::errors::{CliError, CliResult};

pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Bin edges as written in a config: a shipped preset name or the full
/// inline definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PresetSpec {
    Name(String),
    Custom {
        variable: String,
        zero_bin: bool,
        edges: Vec<f64>,
    },
}

impl PresetSpec {
    pub fn resolve(&self) -> CliResult<BinEdges> {
        match self {
            PresetSpec::Name(name) => match name.as_str() {
                "rainfall_table1" => Ok(BinEdges::rainfall_table1()),
                "beaufort" => Ok(BinEdges::beaufort()),
                other => Err(CliError::config(format!(
                    "unknown preset '{other}' (expected rainfall_table1, beaufort, or an inline definition)"
                ))),
            },
            PresetSpec::Custom {
                variable,
                zero_bin,
                edges,
            } => Ok(BinEdges::new(variable, *zero_bin, edges.clone())?),
        }
    }
}

/// Zone layout as written in a config: the quadrant default or explicit
/// rectangles in row/column index space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZonesSpec {
    Named(String),
    Rects(Vec<ZoneRectSpec>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneRectSpec {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl ZonesSpec {
    pub fn resolve(&self, geometry: &GridGeometry) -> CliResult<ZonePartition> {
        match self {
            ZonesSpec::Named(name) if name == "quadrants" => {
                Ok(ZonePartition::quadrants(geometry)?)
            }
            ZonesSpec::Named(other) => Err(CliError::config(format!(
                "unknown zone layout '{other}' (expected \"quadrants\" or a rectangle list)"
            ))),
            ZonesSpec::Rects(rects) => {
                if rects.is_empty() {
                    return Err(CliError::config("the zone rectangle list is empty"));
                }
                let zones: Vec<ZoneRect> = rects
                    .iter()
                    .map(|r| ZoneRect::new(r.row_start, r.row_end, r.col_start, r.col_end))
                    .collect();
                let names: Vec<String> = rects
                    .iter()
                    .enumerate()
                    .map(|(i, r)| r.name.clone().unwrap_or_else(|| format!("Z{}", i + 1)))
                    .collect();
                let partition = ZonePartition::new(zones, names)?;
                partition.check_grid(geometry)?;
                Ok(partition)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgorithmName {
    #[serde(rename = "KMS")]
    Kms,
    #[serde(rename = "HAC")]
    Hac,
}

/// The raw config file: everything optional so command-line flags can
/// supply or override any field. Unknown keys are rejected outright.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zones: Option<ZonesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measures: Option<Vec<Measure>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linkage: Option<LinkageName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_range: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    /// Folds command-line overrides into the file values; flags win.
    pub fn merge(mut self, overrides: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if overrides.$field.is_some() { self.$field = overrides.$field; })*
            };
        }
        take!(
            input, preset, zones, measure, measures, algorithm, linkage, k, k_range, seed,
            restarts, epsilon, max_iter, output_dir
        );
        self
    }
}

/// The effective run: every field settled, echoed verbatim into outputs.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub input: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetSpec>,
    pub zones: ZonesSpec,
    pub measure: Measure,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measures: Option<Vec<Measure>>,
    pub algorithm: AlgorithmName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linkage: Option<LinkageName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_range: Option<(usize, usize)>,
    pub seed: u64,
    pub restarts: usize,
    pub epsilon: f64,
    pub max_iter: usize,
    pub output_dir: PathBuf,
}

impl ResolvedConfig {
    /// Settles defaults and checks cross-field consistency. `need_k` and
    /// `need_k_range` encode what the calling command requires.
    pub fn from_run(run: RunConfig, need_k: bool, need_k_range: bool) -> CliResult<ResolvedConfig> {
        let input = run
            .input
            .ok_or_else(|| CliError::config("no input stack given (config `input` or --input)"))?;
        if let Some(list) = &run.measures {
            if list.is_empty() {
                return Err(CliError::config("`measures` must not be empty"));
            }
            for (i, m) in list.iter().enumerate() {
                if list[..i].contains(m) {
                    return Err(CliError::config(format!("measure {m} listed twice")));
                }
            }
        }
        // A sweep over several measures stands in for the single measure.
        let measure = run
            .measure
            .or_else(|| run.measures.as_ref().and_then(|list| list.first().copied()))
            .ok_or_else(|| CliError::config("no measure given (config `measure` or --measure, L2 or ED)"))?;
        let algorithm = run.algorithm.unwrap_or(AlgorithmName::Kms);
        let linkage = match algorithm {
            AlgorithmName::Hac => Some(run.linkage.unwrap_or(LinkageName::Average)),
            AlgorithmName::Kms => {
                if run.linkage.is_some() {
                    return Err(CliError::config(
                        "linkage is only meaningful with algorithm HAC",
                    ));
                }
                None
            }
        };
        let uses_ed = measure == Measure::Ed
            || run
                .measures
                .as_ref()
                .is_some_and(|list| list.contains(&Measure::Ed));
        if uses_ed && run.preset.is_none() {
            return Err(CliError::config(
                "measure ED needs bin edges (config `preset` or --preset)",
            ));
        }
        if need_k && run.k.is_none() {
            return Err(CliError::config("no cluster count given (config `k` or --k)"));
        }
        if need_k_range && run.k_range.is_none() {
            return Err(CliError::config(
                "no sweep range given (config `k_range` or --k-range)",
            ));
        }
        if let Some((lo, hi)) = run.k_range {
            if lo < 2 || lo > hi {
                return Err(CliError::config(format!(
                    "k_range [{lo}, {hi}] is empty or starts below 2"
                )));
            }
        }
        let epsilon = run.epsilon.unwrap_or(DEFAULT_EPSILON);
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CliError::config("epsilon must be a positive finite number"));
        }
        let restarts = run.restarts.unwrap_or(DEFAULT_RESTARTS);
        let max_iter = run.max_iter.unwrap_or(DEFAULT_MAX_ITER);
        if restarts == 0 || max_iter == 0 {
            return Err(CliError::config("restarts and max_iter must be at least 1"));
        }
        Ok(ResolvedConfig {
            input,
            preset: run.preset,
            zones: run.zones.unwrap_or(ZonesSpec::Named("quadrants".into())),
            measure,
            measures: run.measures,
            algorithm,
            linkage,
            k: run.k,
            k_range: run.k_range,
            seed: run.seed.unwrap_or(0),
            restarts,
            epsilon,
            max_iter,
            output_dir: run.output_dir.unwrap_or_else(|| PathBuf::from("edclust-out")),
        })
    }

    pub fn edges(&self) -> CliResult<Option<BinEdges>> {
        self.preset.as_ref().map(PresetSpec::resolve).transpose()
    }

    pub fn partition(&self, geometry: &GridGeometry) -> CliResult<ZonePartition> {
        self.zones.resolve(geometry)
    }

    pub fn algorithm_for_core(&self) -> Algorithm {
        match self.algorithm {
            AlgorithmName::Kms => Algorithm::Kms,
            AlgorithmName::Hac => {
                Algorithm::Hac(Linkage::from(self.linkage.unwrap_or(LinkageName::Average)))
            }
        }
    }

    /// Canonical JSON of the effective config; hashed for provenance.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").expect("hex write");
        }
        hex
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"measure":"ED","flavor":"spicy"}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("flavor"), "{err}");
    }

    #[test]
    fn preset_names_and_inline_edges_resolve() {
        let named: PresetSpec = serde_json::from_str(r#""rainfall_table1""#).unwrap();
        assert_eq!(named.resolve().unwrap(), BinEdges::rainfall_table1());
        let inline: PresetSpec = serde_json::from_str(
            r#"{"variable":"rainfall","zero_bin":true,"edges":[1.0,2.0]}"#,
        )
        .unwrap();
        assert_eq!(inline.resolve().unwrap().bin_count(), 4);
        let bogus: PresetSpec = serde_json::from_str(r#""metric""#).unwrap();
        assert!(matches!(bogus.resolve().unwrap_err(), CliError::Config(_)));
    }

    #[test]
    fn flags_override_file_values() {
        let file: RunConfig =
            serde_json::from_str(r#"{"measure":"L2","k":3,"seed":7}"#).unwrap();
        let overrides = RunConfig {
            k: Some(5),
            ..RunConfig::default()
        };
        let merged = file.merge(overrides);
        assert_eq!(merged.k, Some(5));
        assert_eq!(merged.seed, Some(7));
    }

    #[test]
    fn resolution_enforces_cross_field_rules() {
        let base = RunConfig {
            input: Some(PathBuf::from("stack.json")),
            measure: Some(Measure::Ed),
            k: Some(3),
            ..RunConfig::default()
        };
        // ED without a preset is unusable
        let err = ResolvedConfig::from_run(base.clone(), true, false).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        let ok = ResolvedConfig::from_run(
            RunConfig {
                preset: Some(PresetSpec::Name("rainfall_table1".into())),
                ..base
            },
            true,
            false,
        )
        .unwrap();
        assert_eq!(ok.restarts, DEFAULT_RESTARTS);
        assert_eq!(ok.seed, 0);
    }

    #[test]
    fn a_measure_list_stands_in_for_the_single_measure() {
        let run: RunConfig = serde_json::from_str(
            r#"{"input":"s.json","measures":["ED","L2"],"preset":"rainfall_table1","k_range":[2,4]}"#,
        )
        .unwrap();
        let cfg = ResolvedConfig::from_run(run, false, true).unwrap();
        assert_eq!(cfg.measure, Measure::Ed);
        assert_eq!(cfg.measures, Some(vec![Measure::Ed, Measure::L2]));

        let dup: RunConfig =
            serde_json::from_str(r#"{"input":"s.json","measures":["L2","L2"]}"#).unwrap();
        let err = ResolvedConfig::from_run(dup, false, false).unwrap_err();
        assert!(err.to_string().contains("twice"), "{err}");

        // ED anywhere in the list needs bin edges, not just in first position
        let ed_later: RunConfig =
            serde_json::from_str(r#"{"input":"s.json","measures":["L2","ED"]}"#).unwrap();
        let err = ResolvedConfig::from_run(ed_later, false, false).unwrap_err();
        assert!(err.to_string().contains("bin edges"), "{err}");
    }

    #[test]
    fn hash_tracks_content_not_formatting() {
        let run: RunConfig = serde_json::from_str(
            r#"{"input":"s.json","measure":"L2","k":2,"output_dir":"out"}"#,
        )
        .unwrap();
        let a = ResolvedConfig::from_run(run.clone(), true, false).unwrap();
        let b = ResolvedConfig::from_run(run, true, false).unwrap();
        assert_eq!(a.sha256(), b.sha256());
        let mut c = ResolvedConfig::from_run(
            serde_json::from_str(
                r#"{"input":"s.json","measure":"L2","k":2,"output_dir":"out"}"#,
            )
            .unwrap(),
            true,
            false,
        )
        .unwrap();
        c.seed = 99;
        assert_ne!(a.sha256(), c.sha256());
    }
}
