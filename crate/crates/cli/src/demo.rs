//! `demo-l2`: reproduces the two constructed cases where plain Euclidean
//! distance cannot tell genuinely different weather situations apart —
//! one localized spike versus the same energy spread thin, and a pattern
//! nudged within its zone versus moved to another zone. Exits 0 only when
//! both pathologies reproduce exactly.

use std::fmt::Write as _;

use clap::Args;
use serde_json::json;

use edclust_core::dissim::{expert_deviation, l2_distance};
use edclust_core::eval::synthetic::{localized_vs_spread, shifted_bar};
use edclust_core::grid::{GridGeometry, ZonePartition};
use edclust_core::quantize::signature;

use crate::config::PresetSpec;
use crate::errors::{CliError, CliResult};
use crate::report::print_line;

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Grid rows
    #[arg(long, default_value_t = 40)]
    pub rows: usize,

    /// Grid columns
    #[arg(long, default_value_t = 40)]
    pub cols: usize,

    /// Spike amplitude A: one cell of value A versus A-squared cells of 1
    #[arg(long, default_value_t = 10)]
    pub amplitude: u32,

    /// Histogram smoothing floor
    #[arg(long, default_value_t = 1e-9)]
    pub epsilon: f64,

    /// Bin-edge preset quantizing the fields
    #[arg(long, default_value = "rainfall_table1")]
    pub preset: String,
}

pub fn run(args: &DemoArgs) -> CliResult<()> {
    let geometry = GridGeometry::index_grid(args.rows, args.cols)?;
    let partition = ZonePartition::quadrants(&geometry)?;
    let edges = PresetSpec::Name(args.preset.clone()).resolve()?;
    let sig = |field, index| signature(field, &partition, &edges, args.epsilon, index);

    // Case 1: a single cell of A and A^2 scattered cells of 1 sit at the
    // same Euclidean distance from the zero field, yet describe opposite
    // situations. The zone-histogram deviation separates them.
    let (reference, localized, spread) = localized_vs_spread(geometry, args.amplitude)?;
    let l2_localized = l2_distance(&reference, &localized)?;
    let l2_spread = l2_distance(&reference, &spread)?;
    let ref_sig = sig(&reference, 0)?;
    let ed_localized = expert_deviation(&ref_sig, &sig(&localized, 1)?)?;
    let ed_spread = expert_deviation(&ref_sig, &sig(&spread, 2)?)?;
    let tie_under_l2 = l2_localized.to_bits() == l2_spread.to_bits();
    let ed_gap = (ed_localized - ed_spread).abs();

    // Case 2: the same bar nudged one column within its zone versus moved
    // to another zone — equal L2 either way; the deviation is exactly zero
    // within the zone and positive across zones.
    let (bar, bar_within, bar_across) = shifted_bar(geometry, &partition, args.amplitude as f64)?;
    let l2_within = l2_distance(&bar, &bar_within)?;
    let l2_across = l2_distance(&bar, &bar_across)?;
    let bar_sig = sig(&bar, 0)?;
    let ed_within = expert_deviation(&bar_sig, &sig(&bar_within, 1)?)?;
    let ed_across = expert_deviation(&bar_sig, &sig(&bar_across, 2)?)?;
    let bar_tie_under_l2 = l2_within.to_bits() == l2_across.to_bits();

    let mut text = String::new();
    let _ = writeln!(text, "case 1: one cell of {a} vs {a}x{a} cells of 1, against a zero field", a = args.amplitude);
    let _ = writeln!(text, "  l2(reference, localized) = {l2_localized}");
    let _ = writeln!(text, "  l2(reference, spread)    = {l2_spread}   (bit-identical: {tie_under_l2})");
    let _ = writeln!(text, "  ed(reference, localized) = {ed_localized:.6}");
    let _ = writeln!(text, "  ed(reference, spread)    = {ed_spread:.6}   (gap: {ed_gap:.6})");
    let _ = writeln!(text, "case 2: bar shifted one column within its zone vs into another zone");
    let _ = writeln!(text, "  l2(bar, within-zone) = {l2_within}");
    let _ = writeln!(text, "  l2(bar, across-zone) = {l2_across}   (bit-identical: {bar_tie_under_l2})");
    let _ = writeln!(text, "  ed(bar, within-zone) = {ed_within}");
    let _ = write!(text, "  ed(bar, across-zone) = {ed_across:.6}");
    print_line(&text)?;
    print_line(
        &json!({
            "case1": {
                "l2_localized": l2_localized,
                "l2_spread": l2_spread,
                "l2_tie": tie_under_l2,
                "ed_localized": ed_localized,
                "ed_spread": ed_spread,
                "ed_gap": ed_gap,
            },
            "case2": {
                "l2_within": l2_within,
                "l2_across": l2_across,
                "l2_tie": bar_tie_under_l2,
                "ed_within": ed_within,
                "ed_across": ed_across,
            },
        })
        .to_string(),
    )?;

    let reproduced = tie_under_l2
        && ed_gap > 0.01
        && bar_tie_under_l2
        && ed_within == 0.0
        && ed_across > 0.0;
    if reproduced {
        Ok(())
    } else {
        Err(CliError::internal(
            "the Euclidean-tie pathology did not reproduce on this configuration",
        ))
    }
}
