//! `edges`: prints bin-edge definitions, either a shipped preset or a
//! quantile fit to the values of an existing stack.

use std::path::{Path, PathBuf};

use clap::Args;

use edclust_core::quantize::BinEdges;
use edclust_core::stack_io::load_stack;

use crate::config::PresetSpec;
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct EdgesArgs {
    /// Shipped preset name (rainfall_table1, beaufort)
    #[arg(long, conflicts_with_all = ["from_stack", "centiles"])]
    pub preset: Option<String>,

    /// Fit edges to the non-missing values of this stack
    #[arg(long, requires = "centiles")]
    pub from_stack: Option<PathBuf>,

    /// Comma-separated centiles in (0,1), strictly increasing, e.g. 0.1,0.5,0.9
    #[arg(long)]
    pub centiles: Option<String>,

    /// Reserve bin 0 for values at or below zero and fit over positives only
    #[arg(long)]
    pub zero_bin: bool,

    /// Variable name stamped on the edges; defaults to the stack's variable
    #[arg(long)]
    pub variable: Option<String>,
}

pub fn run(args: &EdgesArgs) -> CliResult<()> {
    let edges = match (&args.preset, &args.from_stack) {
        (Some(name), None) => PresetSpec::Name(name.clone()).resolve()?,
        (None, Some(stack_path)) => fit_from_stack(args, stack_path)?,
        _ => {
            return Err(CliError::config(
                "give either --preset or --from-stack with --centiles",
            ))
        }
    };
    print_edges(&edges)?;
    Ok(())
}

fn fit_from_stack(args: &EdgesArgs, stack_path: &Path) -> CliResult<BinEdges> {
    let centiles: Vec<f64> = args
        .centiles
        .as_ref()
        .expect("clap requires --centiles")
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::config(format!("bad centile '{s}': {e}")))
        })
        .collect::<CliResult<_>>()?;
    let stack = load_stack(stack_path)?;
    let mut reference = Vec::new();
    for day in stack.days() {
        for cell in 0..day.values().len() {
            if !day.is_missing(cell) {
                reference.push(day.values()[cell] as f64);
            }
        }
    }
    let variable = args
        .variable
        .clone()
        .unwrap_or_else(|| stack.variable().to_string());
    Ok(BinEdges::from_quantiles(
        variable,
        &reference,
        &centiles,
        args.zero_bin,
    )?)
}

fn print_edges(edges: &BinEdges) -> CliResult<()> {
    let json = serde_json::to_string_pretty(edges)
        .map_err(|e| CliError::internal(format!("serializing edges: {e}")))?;
    crate::report::print_line(&json)
}
