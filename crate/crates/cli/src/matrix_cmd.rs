//! `matrix`: precomputes the pairwise dissimilarity matrix for a stack and
//! stores it in the binary matrix format, with an optional CSV export.

use std::fmt::Write as _;
use std::fs;

use clap::Args;
use serde_json::json;

use edclust_core::stack_io::load_stack;

use crate::errors::{CliError, CliResult};
use crate::opts::CommonOpts;
use crate::pipeline;
use crate::report::{print_line, provenance_comment, write_text};

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Also export the matrix as i,j,value triples (upper triangle)
    #[arg(long)]
    pub csv: bool,
}

pub fn run(args: &MatrixArgs) -> CliResult<()> {
    let cfg = args.common.resolve(false, false)?;
    let stack = load_stack(&cfg.input)?;
    let sha = cfg.sha256();
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out.display())))?;

    let prepared = pipeline::prepare(&cfg, &stack, cfg.measure)?;
    let matrix_path = out.join("matrix.edm");
    prepared.matrix.save(&matrix_path)?;

    // round-trip check before reporting success
    let reloaded = edclust_core::DissimilarityMatrix::load(&matrix_path)
        .map_err(|e| CliError::internal(format!("matrix re-read failed: {e}")))?;
    if reloaded.values() != prepared.matrix.values() {
        return Err(CliError::internal(
            "matrix re-read does not match what was computed",
        ));
    }

    let csv_path = if args.csv {
        let path = out.join("matrix.csv");
        let n = prepared.matrix.n_days();
        let mut text = provenance_comment(&sha, cfg.seed);
        text.push_str("i,j,value\n");
        for i in 0..n {
            for j in (i + 1)..n {
                writeln!(text, "{i},{j},{:.12}", prepared.matrix.get(i, j)).expect("string write");
            }
        }
        write_text(&path, &text)?;
        Some(path)
    } else {
        None
    };

    print_line(
        &json!({
            "matrix": matrix_path,
            "csv": csv_path,
            "n_days": prepared.matrix.n_days(),
            "measure": prepared.matrix.measure().to_string(),
            "config_sha256": sha,
        })
        .to_string(),
    )
}
