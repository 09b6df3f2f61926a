//! `ingest`: assembles per-day CSV grids (or a pair of wind-component
//! stacks) into a validated field stack on disk.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args;

use edclust_core::grid::GridGeometry;
use edclust_core::stack_io::{load_stack, read_csv_day, save_stack, stack_from_csv_days};
use edclust_core::wind_speed_from_components;

use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Per-day CSV grid files, one file per day, in date order
    pub files: Vec<PathBuf>,

    /// Comma-separated dates (YYYY-MM-DD), one per file
    #[arg(long, conflicts_with = "start_date")]
    pub dates: Option<String>,

    /// First date; the files are taken as consecutive days from here
    #[arg(long)]
    pub start_date: Option<NaiveDate>,

    /// Physical variable the grids hold (e.g. rainfall, wind_speed)
    #[arg(long, default_value = "rainfall")]
    pub variable: String,

    /// Units of the values (e.g. mm, m/s)
    #[arg(long, default_value = "mm")]
    pub units: String,

    #[arg(long)]
    pub lat_min: Option<f64>,
    #[arg(long)]
    pub lat_max: Option<f64>,
    #[arg(long)]
    pub lon_min: Option<f64>,
    #[arg(long)]
    pub lon_max: Option<f64>,
    /// Grid spacing in degrees; give all five bounds/resolution flags or none
    #[arg(long)]
    pub resolution: Option<f64>,

    /// Derive wind speed from two component stacks instead of reading CSVs
    #[arg(long, requires = "u", requires = "v", conflicts_with = "files")]
    pub wind_speed: bool,

    /// Manifest of the u-component stack (with --wind-speed)
    #[arg(long)]
    pub u: Option<PathBuf>,

    /// Manifest of the v-component stack (with --wind-speed)
    #[arg(long)]
    pub v: Option<PathBuf>,

    /// Manifest path to write; the payload lands next to it
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

pub fn run(args: &IngestArgs) -> CliResult<()> {
    let stack = if args.wind_speed {
        let u = load_stack(args.u.as_ref().expect("clap requires --u"))?;
        let v = load_stack(args.v.as_ref().expect("clap requires --v"))?;
        wind_speed_from_components(&u, &v)?
    } else {
        build_from_csvs(args)?
    };
    save_stack(&stack, &args.output)?;
    log::info!(
        "wrote {} days of {} to {}",
        stack.len(),
        stack.variable(),
        args.output.display()
    );
    crate::report::print_line(
        &serde_json::json!({
            "output": args.output,
            "n_days": stack.len(),
            "variable": stack.variable(),
            "units": stack.units(),
            "n_rows": stack.geometry().n_rows,
            "n_cols": stack.geometry().n_cols,
        })
        .to_string(),
    )
}

fn build_from_csvs(args: &IngestArgs) -> CliResult<edclust_core::FieldStack> {
    if args.files.is_empty() {
        return Err(CliError::config("no input CSV files given"));
    }
    let dates = resolve_dates(args)?;
    for pair in dates.windows(2) {
        let gap = (pair[1] - pair[0]).num_days();
        if gap > 1 {
            log::warn!(
                "date gap: {} missing day(s) between {} and {}",
                gap - 1,
                pair[0],
                pair[1]
            );
        }
    }
    let geometry = match (
        args.lat_min,
        args.lat_max,
        args.lon_min,
        args.lon_max,
        args.resolution,
    ) {
        (Some(lat_min), Some(lat_max), Some(lon_min), Some(lon_max), Some(resolution)) => {
            let (rows, cols, _) = read_csv_day(&args.files[0])?;
            GridGeometry::new(rows, cols, lat_min, lat_max, lon_min, lon_max, resolution)?
        }
        (None, None, None, None, None) => {
            let (rows, cols, _) = read_csv_day(&args.files[0])?;
            GridGeometry::index_grid(rows, cols)?
        }
        _ => {
            return Err(CliError::config(
                "give all of --lat-min/--lat-max/--lon-min/--lon-max/--resolution or none",
            ))
        }
    };
    let files: Vec<(PathBuf, NaiveDate)> = args
        .files
        .iter()
        .cloned()
        .zip(dates)
        .collect();
    Ok(stack_from_csv_days(geometry, &args.variable, &args.units, &files)?)
}

fn resolve_dates(args: &IngestArgs) -> CliResult<Vec<NaiveDate>> {
    match (&args.dates, args.start_date) {
        (Some(list), None) => {
            let dates: Vec<NaiveDate> = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|e| CliError::config(format!("bad date '{s}': {e}")))
                })
                .collect::<CliResult<_>>()?;
            if dates.len() != args.files.len() {
                return Err(CliError::config(format!(
                    "{} dates given for {} files",
                    dates.len(),
                    args.files.len()
                )));
            }
            Ok(dates)
        }
        (None, Some(start)) => Ok((0..args.files.len())
            .map(|i| start + chrono::Duration::days(i as i64))
            .collect()),
        (None, None) => Err(CliError::config(
            "give either --dates or --start-date to date the files",
        )),
        (Some(_), Some(_)) => unreachable!("clap marks the flags as conflicting"),
    }
}
