//! `edclust`: clusters daily gridded scalar fields (rainfall, wind speed)
//! under either plain Euclidean distance or a zone-histogram deviation
//! measure, and writes reproducible, provenance-stamped analysis bundles.

mod cluster_cmd;
mod config;
mod demo;
mod edges_cmd;
mod errors;
mod ingest;
mod matrix_cmd;
mod opts;
mod pipeline;
mod report;
mod sweep_cmd;

use clap::{Parser, Subcommand};

use errors::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "edclust",
    version,
    about = "Cluster daily gridded weather fields under Euclidean or zone-histogram dissimilarity"
)]
struct Cli {
    /// Worker threads (overrides the ED_CLUSTER_THREADS env var; default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble per-day CSV grids (or wind components) into a field stack
    Ingest(ingest::IngestArgs),
    /// Fit clusters and write the full output bundle
    Cluster(cluster_cmd::ClusterArgs),
    /// Sweep k and report mean silhouettes as CSV + SVG
    Sweep(sweep_cmd::SweepArgs),
    /// Reproduce the Euclidean-distance pathologies on constructed fields
    #[command(name = "demo-l2")]
    DemoL2(demo::DemoArgs),
    /// Print a bin-edge preset or fit edges to a stack's values
    Edges(edges_cmd::EdgesArgs),
    /// Precompute and store a pairwise dissimilarity matrix
    Matrix(matrix_cmd::MatrixArgs),
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("ED_CLUSTER_THREADS") {
            Ok(text) => Some(text.parse().map_err(|e| {
                CliError::config(format!(
                    "ED_CLUSTER_THREADS='{text}' is not a thread count: {e}"
                ))
            })?),
            Err(std::env::VarError::NotPresent) => None,
            Err(e) => return Err(CliError::config(format!("ED_CLUSTER_THREADS: {e}"))),
        },
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(CliError::config("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::internal(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = configure_threads(cli.threads).and_then(|()| match &cli.command {
        Command::Ingest(args) => ingest::run(args),
        Command::Cluster(args) => cluster_cmd::run(args),
        Command::Sweep(args) => sweep_cmd::run(args),
        Command::DemoL2(args) => demo::run(args),
        Command::Edges(args) => edges_cmd::run(args),
        Command::Matrix(args) => matrix_cmd::run(args),
    });
    if let Err(error) = outcome {
        eprintln!("{error}");
        std::process::exit(error.exit_code());
    }
}
