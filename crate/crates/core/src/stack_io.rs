//! On-disk format for field stacks: a JSON manifest next to a raw payload of
//! little-endian 32-bit floats, row-major, days concatenated. Plus a
//! convenience CSV reader (one file per day).
//!
//! Missing cells are stored as a sentinel declared in the manifest (default
//! NaN) and surface as the field's missing mask on load.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FieldStack, GridField, GridGeometry};

pub const MANIFEST_VERSION: u32 = 1;

/// Missing-value sentinel: the string `"nan"` or a concrete number.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MissingSentinel {
    #[default]
    Nan,
    Value(f64),
}

impl MissingSentinel {
    fn matches(&self, v: f32) -> bool {
        match self {
            MissingSentinel::Nan => v.is_nan(),
            MissingSentinel::Value(s) => f64::from(v) == *s,
        }
    }

    fn encode(&self) -> f32 {
        match self {
            MissingSentinel::Nan => f32::NAN,
            MissingSentinel::Value(s) => *s as f32,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MissingField {
    Tag(String),
    Number(f64),
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    variable: String,
    units: String,
    n_rows: usize,
    n_cols: usize,
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
    resolution: f64,
    dates: Vec<NaiveDate>,
    payload_file: String,
    dtype: String,
    missing: MissingField,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    provenance: Option<serde_json::Value>,
}

fn manifest_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Writes `stack` as a manifest at `path` plus a sibling payload file, using
/// NaN as the missing sentinel. `load_stack(path)` reproduces the stack.
pub fn save_stack(stack: &FieldStack, path: &Path) -> Result<()> {
    save_stack_with(stack, path, MissingSentinel::Nan, None)
}

/// As [`save_stack`] with an explicit sentinel and an optional free-form
/// provenance object echoed into the manifest.
pub fn save_stack_with(
    stack: &FieldStack,
    path: &Path,
    sentinel: MissingSentinel,
    provenance: Option<serde_json::Value>,
) -> Result<()> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("stack");
    let payload_file = format!("{stem}.f32le");
    let payload_path = path.with_file_name(&payload_file);

    let geom = stack.geometry();
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        variable: stack.variable().to_string(),
        units: stack.units().to_string(),
        n_rows: geom.n_rows,
        n_cols: geom.n_cols,
        lat_min: geom.lat_min,
        lat_max: geom.lat_max,
        lon_min: geom.lon_min,
        lon_max: geom.lon_max,
        resolution: geom.resolution,
        dates: stack.dates().collect(),
        payload_file,
        dtype: "f32le".into(),
        missing: match sentinel {
            MissingSentinel::Nan => MissingField::Tag("nan".into()),
            MissingSentinel::Value(v) => MissingField::Number(v),
        },
        provenance,
    };

    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| manifest_err(path, e.to_string()))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))?;

    let file = fs::File::create(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let mut w = BufWriter::new(file);
    for day in stack.days() {
        for (cell, &v) in day.values().iter().enumerate() {
            let enc = if day.is_missing(cell) { sentinel.encode() } else { v };
            w.write_all(&enc.to_le_bytes())
                .map_err(|e| Error::io(&payload_path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&payload_path, e))?;
    Ok(())
}

/// Loads the stack written by [`save_stack`]: parses and validates the
/// manifest, then decodes the payload day by day, turning sentinel cells
/// into the missing mask.
pub fn load_stack(path: &Path) -> Result<FieldStack> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| manifest_err(path, e.to_string()))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(manifest_err(
            path,
            format!("unsupported version {}", manifest.version),
        ));
    }
    if manifest.dtype != "f32le" {
        return Err(manifest_err(
            path,
            format!("unsupported dtype {:?}", manifest.dtype),
        ));
    }
    let sentinel = match &manifest.missing {
        MissingField::Tag(t) if t == "nan" => MissingSentinel::Nan,
        MissingField::Tag(t) => {
            return Err(manifest_err(path, format!("unknown missing tag {t:?}")));
        }
        MissingField::Number(v) => MissingSentinel::Value(*v),
    };
    let geometry = GridGeometry::new(
        manifest.n_rows,
        manifest.n_cols,
        manifest.lat_min,
        manifest.lat_max,
        manifest.lon_min,
        manifest.lon_max,
        manifest.resolution,
    )?;
    for i in 1..manifest.dates.len() {
        if manifest.dates[i] <= manifest.dates[i - 1] {
            return Err(Error::DatesNotIncreasing { day_index: i });
        }
    }

    let payload_path = path.with_file_name(&manifest.payload_file);
    let bytes = fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let n_cells = geometry.n_cells();
    let expected = manifest
        .dates
        .len()
        .checked_mul(n_cells)
        .ok_or_else(|| manifest_err(path, "payload size overflows".to_string()))?;
    let actual = bytes.len() / 4;
    if bytes.len() % 4 != 0 || actual != expected {
        return Err(Error::PayloadSize {
            path: payload_path,
            expected,
            actual,
            day_index: actual / n_cells.max(1),
        });
    }

    let check_sign = matches!(manifest.variable.as_str(), "rainfall" | "wind_speed");
    let mut days = Vec::with_capacity(manifest.dates.len());
    let mut missing_cells = 0usize;
    for (day_index, date) in manifest.dates.iter().enumerate() {
        let mut values = Vec::with_capacity(n_cells);
        let mut mask = vec![false; n_cells];
        let mut any_missing = false;
        let base = day_index * n_cells * 4;
        for (cell, masked) in mask.iter_mut().enumerate() {
            let off = base + cell * 4;
            let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            if sentinel.matches(v) {
                *masked = true;
                any_missing = true;
                missing_cells += 1;
                values.push(0.0);
            } else {
                if !v.is_finite() {
                    return Err(Error::BadValue {
                        day_index,
                        cell,
                        detail: format!("non-finite value {v}"),
                    });
                }
                if check_sign && v < 0.0 {
                    return Err(Error::BadValue {
                        day_index,
                        cell,
                        detail: format!("negative {} value {v}", manifest.variable),
                    });
                }
                values.push(v);
            }
        }
        let mask = if any_missing { Some(mask) } else { None };
        days.push(GridField::with_missing(geometry, *date, values, mask)?);
    }
    if missing_cells > 0 {
        log::warn!(
            "{}: {missing_cells} missing cells; they are excluded from histograms and \
             treated as 0 in L2 unless missing in both days",
            path.display()
        );
    }
    FieldStack::new(geometry, manifest.variable, manifest.units, days)
}

/// Reads one day of CSV values: `n_rows` lines of `n_cols` comma-separated
/// numbers. Empty cells and the literal `nan` are missing.
pub fn read_csv_day(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let csv_err = |line: usize, detail: String| Error::Csv {
        path: PathBuf::from(path),
        line,
        detail,
    };

    let mut values = Vec::new();
    let mut n_cols = 0usize;
    let mut n_rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = 0usize;
        for cell in line.split(',') {
            let cell = cell.trim();
            let v = if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                f32::NAN
            } else {
                cell.parse::<f32>()
                    .map_err(|e| csv_err(lineno + 1, format!("{cell:?}: {e}")))?
            };
            values.push(v);
            row += 1;
        }
        if n_rows == 0 {
            n_cols = row;
        } else if row != n_cols {
            return Err(csv_err(
                lineno + 1,
                format!("{row} columns, expected {n_cols}"),
            ));
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(csv_err(1, "file holds no rows".into()));
    }
    Ok((n_rows, n_cols, values))
}

/// Assembles per-day CSV files into a stack. Values equal to NaN become
/// missing cells. All files must share one shape; `geometry` must match it.
pub fn stack_from_csv_days(
    geometry: GridGeometry,
    variable: &str,
    units: &str,
    files: &[(PathBuf, NaiveDate)],
) -> Result<FieldStack> {
    let mut days = Vec::with_capacity(files.len());
    for (path, date) in files {
        let (rows, cols, raw) = read_csv_day(path)?;
        if rows != geometry.n_rows || cols != geometry.n_cols {
            return Err(Error::Csv {
                path: path.clone(),
                line: 1,
                detail: format!(
                    "day shape {rows}x{cols} does not match the {}x{} grid",
                    geometry.n_rows, geometry.n_cols
                ),
            });
        }
        let mask: Vec<bool> = raw.iter().map(|v| v.is_nan()).collect();
        let any = mask.iter().any(|&m| m);
        let values: Vec<f32> = raw.iter().map(|&v| if v.is_nan() { 0.0 } else { v }).collect();
        days.push(GridField::with_missing(
            geometry,
            *date,
            values,
            any.then_some(mask),
        )?);
    }
    FieldStack::new(geometry, variable, units, days)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn sample_stack() -> FieldStack {
        let geom = GridGeometry::index_grid(3, 3).unwrap();
        let d1 = GridField::new(
            geom,
            date("2001-05-01"),
            vec![0.0, 1.5, 2.25, 0.0, 4.0, 0.5, 7.0, 0.0, 9.5],
        )
        .unwrap();
        let d2 = GridField::new(
            geom,
            date("2001-05-02"),
            vec![1.0, 0.0, 0.0, 3.5, 0.0, 5.5, 0.0, 8.0, 0.0],
        )
        .unwrap();
        FieldStack::new(geom, "rainfall", "mm", vec![d1, d2]).unwrap()
    }

    #[test]
    fn round_trip_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stack.json");
        let stack = sample_stack();
        save_stack(&stack, &path).unwrap();
        let back = load_stack(&path).unwrap();
        assert_eq!(stack, back);
    }

    #[test]
    fn round_trip_preserves_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("masked.json");
        let geom = GridGeometry::index_grid(3, 3).unwrap();
        let mut mask = vec![false; 9];
        mask[4] = true;
        mask[7] = true;
        let day = GridField::with_missing(
            geom,
            date("2001-05-01"),
            vec![1.0; 9],
            Some(mask.clone()),
        )
        .unwrap();
        let stack = FieldStack::new(geom, "rainfall", "mm", vec![day]).unwrap();
        save_stack(&stack, &path).unwrap();
        let back = load_stack(&path).unwrap();
        assert_eq!(back.day(0).missing(), Some(mask.as_slice()));
        assert_eq!(stack, back);
    }

    #[test]
    fn empty_stack_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json");
        let geom = GridGeometry::index_grid(3, 3).unwrap();
        let stack = FieldStack::new(geom, "rainfall", "mm", vec![]).unwrap();
        save_stack(&stack, &path).unwrap();
        let back = load_stack(&path).unwrap();
        assert_eq!(back.len(), 0);
        assert_eq!(stack, back);
    }

    #[test]
    fn paper_scale_manifest_accepted() {
        // 101x189 grid, 19,089 values per day
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("era.json");
        let geom = GridGeometry::new(101, 189, 5.0, 30.0, -66.25, -19.25, 0.25).unwrap();
        assert_eq!(geom.n_cells(), 19_089);
        let day = GridField::zeros(geom, date("1979-01-01")).unwrap();
        let stack = FieldStack::new(geom, "wind_speed", "m/s", vec![day]).unwrap();
        save_stack(&stack, &path).unwrap();
        let back = load_stack(&path).unwrap();
        assert_eq!(back.geometry().n_cells(), 19_089);
    }

    #[test]
    fn truncated_payload_names_offending_day() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.json");
        let stack = sample_stack();
        save_stack(&stack, &path).unwrap();
        let payload = dir.path().join("trunc.f32le");
        let bytes = fs::read(&payload).unwrap();
        fs::write(&payload, &bytes[..bytes.len() - 4]).unwrap();
        match load_stack(&path).unwrap_err() {
            Error::PayloadSize {
                expected,
                actual,
                day_index,
                ..
            } => {
                assert_eq!(expected, 18);
                assert_eq!(actual, 17);
                assert_eq!(day_index, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn numeric_sentinel_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sentinel.json");
        let geom = GridGeometry::index_grid(2, 2).unwrap();
        let mask = vec![false, true, false, false];
        let day =
            GridField::with_missing(geom, date("2001-05-01"), vec![1.0; 4], Some(mask.clone()))
                .unwrap();
        let stack = FieldStack::new(geom, "rainfall", "mm", vec![day]).unwrap();
        save_stack_with(&stack, &path, MissingSentinel::Value(-999.0), None).unwrap();
        let back = load_stack(&path).unwrap();
        assert_eq!(back.day(0).missing(), Some(mask.as_slice()));
    }

    #[test]
    fn negative_rainfall_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neg.json");
        let geom = GridGeometry::index_grid(2, 2).unwrap();
        let day = GridField::new(geom, date("2001-05-01"), vec![1.0, -0.5, 0.0, 2.0]).unwrap();
        let stack = FieldStack::new(geom, "rainfall", "mm", vec![day]).unwrap();
        save_stack(&stack, &path).unwrap();
        let err = load_stack(&path).unwrap_err();
        assert!(matches!(err, Error::BadValue { day_index: 0, cell: 1, .. }));
    }

    #[test]
    fn csv_day_reads_values_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("day.csv");
        fs::write(&path, "1.0, 2.0, 3.0\n4.5, nan, 6.0\n").unwrap();
        let (rows, cols, values) = read_csv_day(&path).unwrap();
        assert_eq!((rows, cols), (2, 3));
        assert_eq!(values[3], 4.5);
        assert!(values[4].is_nan());
    }

    #[test]
    fn csv_shape_drift_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        fs::write(&path, "1,2,3\n4,5\n").unwrap();
        let err = read_csv_day(&path).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, .. }));
    }
}
