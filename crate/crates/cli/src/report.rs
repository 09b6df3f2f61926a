//! Output writers shared by the commands: provenance-stamped CSV files, a
//! self-contained SVG line plot, and the re-read validation that gates a
//! successful exit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use edclust_core::eval::{MonthlyDistribution, SweepPoint};

use crate::errors::{CliError, CliResult};

/// `#`-prefixed comment lines stamped at the top of every CSV so a file can
/// be traced back to the exact run that produced it.
pub fn provenance_comment(config_sha256: &str, seed: u64) -> String {
    format!("# config_sha256={config_sha256}\n# seed={seed}\n")
}

/// Prints one block of text (plus a trailing newline) to stdout. When the
/// reader has gone away — `edclust ... | head` — this exits quietly instead
/// of panicking, like other well-behaved command-line tools.
pub fn print_line(text: &str) -> CliResult<()> {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        Err(e) => Err(CliError::internal(format!("writing to stdout: {e}"))),
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::internal(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub const SILHOUETTE_HEADER: &str = "day_index,date,cluster,silhouette";
pub const MONTHLY_HEADER: &str = "cluster,month,count";
pub const SWEEP_HEADER: &str = "k,mean_silhouette,algorithm,measure,best";

pub fn write_silhouette_csv(
    path: &Path,
    config_sha256: &str,
    seed: u64,
    dates: &[chrono::NaiveDate],
    assignments: &[usize],
    per_sample: &[f64],
) -> CliResult<()> {
    let mut text = provenance_comment(config_sha256, seed);
    text.push_str(SILHOUETTE_HEADER);
    text.push('\n');
    for (i, ((date, &cluster), &s)) in dates
        .iter()
        .zip(assignments)
        .zip(per_sample)
        .enumerate()
    {
        writeln!(text, "{i},{date},{cluster},{s:.12}").expect("string write");
    }
    write_text(path, &text)
}

pub fn write_monthly_csv(
    path: &Path,
    config_sha256: &str,
    seed: u64,
    monthly: &MonthlyDistribution,
) -> CliResult<()> {
    let mut text = provenance_comment(config_sha256, seed);
    text.push_str(MONTHLY_HEADER);
    text.push('\n');
    for (cluster, counts) in monthly.counts.iter().enumerate() {
        for (month0, &count) in counts.iter().enumerate() {
            writeln!(text, "{cluster},{},{count}", month0 + 1).expect("string write");
        }
    }
    write_text(path, &text)
}

/// One plotted/tabulated sweep series: every k with its mean silhouette,
/// labeled by the algorithm and measure that produced the labels. For
/// cross-measure diagnostics `measure` names both sides.
pub struct SweepSeries {
    pub algorithm: String,
    pub measure: String,
    pub points: Vec<SweepPoint>,
    pub best_k: usize,
}

impl SweepSeries {
    pub fn label(&self) -> String {
        format!("{}/{}", self.algorithm, self.measure)
    }
}

pub fn write_sweep_csv(
    path: &Path,
    config_sha256: &str,
    seed: u64,
    series: &[SweepSeries],
) -> CliResult<()> {
    let mut text = provenance_comment(config_sha256, seed);
    text.push_str(SWEEP_HEADER);
    text.push('\n');
    for s in series {
        for point in &s.points {
            writeln!(
                text,
                "{},{:.12},{},{},{}",
                point.k,
                point.mean_silhouette,
                s.algorithm,
                s.measure,
                point.k == s.best_k
            )
            .expect("string write");
        }
    }
    write_text(path, &text)
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 48.0;

/// Renders a line plot of the sweep series to SVG text. Entirely
/// deterministic: fixed canvas, fixed palette, fixed-precision coordinates,
/// and the config hash embedded as a comment instead of any timestamp.
pub fn sweep_svg(title: &str, series: &[SweepSeries], config_sha256: &str) -> String {
    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| (p.k as f64, p.mean_silhouette)))
        .collect();
    let (x_min, x_max) = span(points.iter().map(|p| p.0));
    let (mut y_min, mut y_max) = span(points.iter().map(|p| p.1));
    let pad = 0.05 * (y_max - y_min).max(1e-9);
    y_min -= pad;
    y_max += pad;

    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min).max(1e-12) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - y_min) / (y_max - y_min).max(1e-12) * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    )
    .unwrap();
    writeln!(svg, "<!-- config_sha256={config_sha256} -->").unwrap();
    writeln!(svg, "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<text x=\"{:.4}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        SVG_W / 2.0,
        xml_escape(title)
    )
    .unwrap();

    // axes
    writeln!(
        svg,
        "<line x1=\"{MARGIN_L:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"black\"/>",
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    )
    .unwrap();
    writeln!(
        svg,
        "<line x1=\"{MARGIN_L:.4}\" y1=\"{MARGIN_T:.4}\" x2=\"{MARGIN_L:.4}\" y2=\"{:.4}\" stroke=\"black\"/>",
        MARGIN_T + plot_h
    )
    .unwrap();

    // x ticks: one per integer k when the span is small, else five even ticks
    let x_ticks: Vec<f64> = if (x_max - x_min) <= 16.0 {
        let lo = x_min.ceil() as i64;
        let hi = x_max.floor() as i64;
        (lo..=hi).map(|v| v as f64).collect()
    } else {
        (0..5)
            .map(|i| x_min + (x_max - x_min) * i as f64 / 4.0)
            .collect()
    };
    for &t in &x_ticks {
        let x = sx(t);
        writeln!(
            svg,
            "<line x1=\"{x:.4}\" y1=\"{:.4}\" x2=\"{x:.4}\" y2=\"{:.4}\" stroke=\"black\"/>",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        )
        .unwrap();
        let label = if t.fract() == 0.0 {
            format!("{}", t as i64)
        } else {
            format!("{t:.2}")
        };
        writeln!(
            svg,
            "<text x=\"{x:.4}\" y=\"{:.4}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{label}</text>",
            MARGIN_T + plot_h + 18.0
        )
        .unwrap();
    }
    for i in 0..5 {
        let t = y_min + (y_max - y_min) * i as f64 / 4.0;
        let y = sy(t);
        writeln!(
            svg,
            "<line x1=\"{:.4}\" y1=\"{y:.4}\" x2=\"{MARGIN_L:.4}\" y2=\"{y:.4}\" stroke=\"black\"/>",
            MARGIN_L - 5.0
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.4}\" y=\"{:.4}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{t:.3}</text>",
            MARGIN_L - 8.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        svg,
        "<text x=\"{:.4}\" y=\"{:.4}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">k</text>",
        MARGIN_L + plot_w / 2.0,
        SVG_H - 10.0
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"16\" y=\"{:.4}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.4})\">mean silhouette</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    )
    .unwrap();

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.4},{:.4}", sx(p.k as f64), sy(p.mean_silhouette)))
            .collect();
        writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.join(" ")
        )
        .unwrap();
        for p in &s.points {
            let r = if p.k == s.best_k { 4.0 } else { 2.5 };
            writeln!(
                svg,
                "<circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"{r}\" fill=\"{color}\"/>",
                sx(p.k as f64),
                sy(p.mean_silhouette)
            )
            .unwrap();
        }
        // legend row
        let ly = MARGIN_T + 8.0 + 16.0 * si as f64;
        let lx = MARGIN_L + plot_w - 150.0;
        writeln!(
            svg,
            "<line x1=\"{lx:.4}\" y1=\"{ly:.4}\" x2=\"{:.4}\" y2=\"{ly:.4}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 22.0
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.4}\" y=\"{:.4}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            lx + 28.0,
            ly + 4.0,
            xml_escape(&s.label())
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Re-reads a CSV written by this process: provenance comments present,
/// header exact, every row with the header's column count. Returns the
/// data-row count.
pub fn check_csv(path: &Path, expected_header: &str) -> CliResult<usize> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::internal(format!("bundle check: cannot re-read {}: {e}", path.display())))?;
    let mut lines = text.lines().peekable();
    let mut saw_hash = false;
    while let Some(line) = lines.peek() {
        if line.starts_with('#') {
            if line.starts_with("# config_sha256=") {
                saw_hash = true;
            }
            lines.next();
        } else {
            break;
        }
    }
    if !saw_hash {
        return Err(CliError::internal(format!(
            "bundle check: {} lacks a config_sha256 comment",
            path.display()
        )));
    }
    let header = lines.next().unwrap_or_default();
    if header != expected_header {
        return Err(CliError::internal(format!(
            "bundle check: {} header is '{header}', expected '{expected_header}'",
            path.display()
        )));
    }
    let columns = expected_header.split(',').count();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        if line.split(',').count() != columns {
            return Err(CliError::internal(format!(
                "bundle check: {} data row {} has the wrong column count",
                path.display(),
                i + 1
            )));
        }
        rows += 1;
    }
    Ok(rows)
}

/// Minimal well-formedness check for an SVG we just wrote: root element,
/// closing tag, and the provenance comment.
pub fn check_svg(path: &Path, config_sha256: &str) -> CliResult<()> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::internal(format!("bundle check: cannot re-read {}: {e}", path.display())))?;
    if !text.trim_start().starts_with("<svg") || !text.trim_end().ends_with("</svg>") {
        return Err(CliError::internal(format!(
            "bundle check: {} is not a complete SVG document",
            path.display()
        )));
    }
    if !text.contains(&format!("config_sha256={config_sha256}")) {
        return Err(CliError::internal(format!(
            "bundle check: {} lacks the run's config hash",
            path.display()
        )));
    }
    Ok(())
}
