//! Data model for daily gridded scalar fields: grid geometry, single-day
//! fields, multi-day stacks, and the rectangular zone partitions that the
//! histogram dissimilarity operates on.
//!
//! Everything here is immutable after construction; constructors validate
//! the structural invariants and the accessors hand out shared views.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular lat/lon grid: dimensions, bounding box, and cell resolution in
/// degrees. The bounding box must be consistent with the dimensions to
/// within half a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub n_rows: usize,
    pub n_cols: usize,
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    /// Degrees per cell.
    pub resolution: f64,
}

impl GridGeometry {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        lat_min: f64,
        lat_max: f64,
        lon_min: f64,
        lon_max: f64,
        resolution: f64,
    ) -> Result<Self> {
        let geom = GridGeometry {
            n_rows,
            n_cols,
            lat_min,
            lat_max,
            lon_min,
            lon_max,
            resolution,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Geometry for a grid addressed purely by indices: degenerate 1-degree
    /// cells anchored at the origin. Used by synthetic data and CSV ingestion
    /// when no geographic bounds are supplied.
    pub fn index_grid(n_rows: usize, n_cols: usize) -> Result<Self> {
        Self::new(
            n_rows,
            n_cols,
            0.0,
            (n_rows.max(1) - 1) as f64,
            0.0,
            (n_cols.max(1) - 1) as f64,
            1.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |detail: String| Err(Error::Geometry { detail });
        if self.n_rows < 1 || self.n_cols < 1 {
            return fail(format!("{}x{} grid has no cells", self.n_rows, self.n_cols));
        }
        let bounds = [self.lat_min, self.lat_max, self.lon_min, self.lon_max];
        if bounds.iter().any(|b| !b.is_finite()) {
            return fail(format!(
                "grid bounds must be finite, got lat [{}, {}] lon [{}, {}]",
                self.lat_min, self.lat_max, self.lon_min, self.lon_max
            ));
        }
        if self.lat_min >= self.lat_max && self.n_rows > 1 {
            return fail(format!("lat_min {} >= lat_max {}", self.lat_min, self.lat_max));
        }
        if self.lon_min >= self.lon_max && self.n_cols > 1 {
            return fail(format!("lon_min {} >= lon_max {}", self.lon_min, self.lon_max));
        }
        if !self.resolution.is_finite() || self.resolution <= 0.0 {
            return fail(format!("resolution {} must be positive", self.resolution));
        }
        let rows = (self.lat_max - self.lat_min) / self.resolution + 1.0;
        if (rows - self.n_rows as f64).abs() > 0.5 {
            return fail(format!(
                "latitude span implies {rows:.2} rows, manifest says {}",
                self.n_rows
            ));
        }
        let cols = (self.lon_max - self.lon_min) / self.resolution + 1.0;
        if (cols - self.n_cols as f64).abs() > 0.5 {
            return fail(format!(
                "longitude span implies {cols:.2} columns, manifest says {}",
                self.n_cols
            ));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn cell_index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        row * self.n_cols + col
    }
}

/// One day's field: a row-major array of values over a [`GridGeometry`],
/// stamped with a calendar date. Cells flagged missing hold 0.0 in `values`;
/// the mask decides how downstream operations treat them.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    geometry: GridGeometry,
    date: NaiveDate,
    values: Vec<f32>,
    missing: Option<Vec<bool>>,
}

impl GridField {
    pub fn new(geometry: GridGeometry, date: NaiveDate, values: Vec<f32>) -> Result<Self> {
        Self::with_missing(geometry, date, values, None)
    }

    pub fn with_missing(
        geometry: GridGeometry,
        date: NaiveDate,
        mut values: Vec<f32>,
        missing: Option<Vec<bool>>,
    ) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.n_cells() {
            return Err(Error::GeometryMismatch {
                detail: format!(
                    "field of {} values does not fill a {}x{} grid",
                    values.len(),
                    geometry.n_rows,
                    geometry.n_cols
                ),
            });
        }
        if let Some(mask) = &missing {
            if mask.len() != values.len() {
                return Err(Error::GeometryMismatch {
                    detail: format!(
                        "missing mask of {} cells does not match {} values",
                        mask.len(),
                        values.len()
                    ),
                });
            }
            for (v, &m) in values.iter_mut().zip(mask) {
                if m {
                    *v = 0.0;
                }
            }
        }
        let missing = missing.filter(|mask| mask.iter().any(|&m| m));
        Ok(GridField {
            geometry,
            date,
            values,
            missing,
        })
    }

    /// All-zero field, handy as the reference in pathology constructions.
    pub fn zeros(geometry: GridGeometry, date: NaiveDate) -> Result<Self> {
        let n = geometry.n_cells();
        Self::new(geometry, date, vec![0.0; n])
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Per-cell missing mask, present only when at least one cell is missing.
    pub fn missing(&self) -> Option<&[bool]> {
        self.missing.as_deref()
    }

    pub fn is_missing(&self, cell: usize) -> bool {
        self.missing.as_ref().is_some_and(|m| m[cell])
    }

    pub fn has_missing(&self) -> bool {
        self.missing.is_some()
    }

    /// Cell value with the missing-as-zero policy applied.
    pub fn effective(&self, cell: usize) -> f64 {
        if self.is_missing(cell) {
            0.0
        } else {
            f64::from(self.values[cell])
        }
    }

    pub fn value(&self, row: usize, col: usize) -> f32 {
        self.values[self.geometry.cell_index(row, col)]
    }
}

/// Ordered stack of daily fields sharing one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStack {
    geometry: GridGeometry,
    variable: String,
    units: String,
    days: Vec<GridField>,
}

impl FieldStack {
    pub fn new(
        geometry: GridGeometry,
        variable: impl Into<String>,
        units: impl Into<String>,
        days: Vec<GridField>,
    ) -> Result<Self> {
        geometry.validate()?;
        for (i, day) in days.iter().enumerate() {
            if *day.geometry() != geometry {
                return Err(Error::GeometryMismatch {
                    detail: format!("day {i} does not share the stack geometry"),
                });
            }
        }
        for i in 1..days.len() {
            if days[i].date() <= days[i - 1].date() {
                return Err(Error::DatesNotIncreasing { day_index: i });
            }
        }
        Ok(FieldStack {
            geometry,
            variable: variable.into(),
            units: units.into(),
            days,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn day(&self, index: usize) -> &GridField {
        &self.days[index]
    }

    pub fn days(&self) -> &[GridField] {
        &self.days
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.days.iter().map(|d| d.date())
    }
}

/// Half-open rectangle of grid cells: rows `row_start..row_end`,
/// columns `col_start..col_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneRect {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl ZoneRect {
    pub fn new(row_start: usize, row_end: usize, col_start: usize, col_end: usize) -> Self {
        ZoneRect {
            row_start,
            row_end,
            col_start,
            col_end,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.row_end.saturating_sub(self.row_start) * self.col_end.saturating_sub(self.col_start)
    }

    fn overlaps(&self, other: &ZoneRect) -> bool {
        self.row_start < other.row_end
            && other.row_start < self.row_end
            && self.col_start < other.col_end
            && other.col_start < self.col_end
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row_start..self.row_end).contains(&row) && (self.col_start..self.col_end).contains(&col)
    }
}

/// Named, pairwise-disjoint rectangles over the grid. Cells outside every
/// zone are ignored by all histogram operations; the union need not cover
/// the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePartition {
    zones: Vec<ZoneRect>,
    names: Vec<String>,
}

impl ZonePartition {
    pub fn new(zones: Vec<ZoneRect>, names: Vec<String>) -> Result<Self> {
        if zones.is_empty() {
            return Err(Error::Partition {
                detail: "a partition needs at least one zone".into(),
            });
        }
        if zones.len() != names.len() {
            return Err(Error::Partition {
                detail: format!("{} zones but {} names", zones.len(), names.len()),
            });
        }
        for (i, z) in zones.iter().enumerate() {
            if z.row_start >= z.row_end || z.col_start >= z.col_end {
                return Err(Error::Partition {
                    detail: format!("zone {} ({}) contains no cells", names[i], i),
                });
            }
        }
        for i in 0..zones.len() {
            for j in i + 1..zones.len() {
                if zones[i].overlaps(&zones[j]) {
                    return Err(Error::Partition {
                        detail: format!("zones {} and {} overlap", names[i], names[j]),
                    });
                }
            }
        }
        Ok(ZonePartition { zones, names })
    }

    /// The default 2x2 quadrant split of a grid, zones named A1..A4 in
    /// row-major order (top-left, top-right, bottom-left, bottom-right).
    pub fn quadrants(geometry: &GridGeometry) -> Result<Self> {
        if geometry.n_rows < 2 || geometry.n_cols < 2 {
            return Err(Error::Partition {
                detail: format!(
                    "{}x{} grid is too small to split into quadrants",
                    geometry.n_rows, geometry.n_cols
                ),
            });
        }
        let rm = geometry.n_rows / 2;
        let cm = geometry.n_cols / 2;
        let zones = vec![
            ZoneRect::new(0, rm, 0, cm),
            ZoneRect::new(0, rm, cm, geometry.n_cols),
            ZoneRect::new(rm, geometry.n_rows, 0, cm),
            ZoneRect::new(rm, geometry.n_rows, cm, geometry.n_cols),
        ];
        let names = ["A1", "A2", "A3", "A4"].map(String::from).to_vec();
        Self::new(zones, names)
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zones(&self) -> &[ZoneRect] {
        &self.zones
    }

    pub fn zone(&self, index: usize) -> Result<&ZoneRect> {
        self.zones.get(index).ok_or(Error::ZoneOutOfRange {
            zone_index: index,
            zone_count: self.zones.len(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Checks that every zone fits inside the given grid.
    pub fn check_grid(&self, geometry: &GridGeometry) -> Result<()> {
        for (i, z) in self.zones.iter().enumerate() {
            if z.row_end > geometry.n_rows || z.col_end > geometry.n_cols {
                return Err(Error::Partition {
                    detail: format!(
                        "zone {} ({}) exceeds the {}x{} grid",
                        self.names[i], i, geometry.n_rows, geometry.n_cols
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Non-missing values inside one zone, in row-major cell order.
pub fn extract_zone(
    field: &GridField,
    partition: &ZonePartition,
    zone_index: usize,
) -> Result<Vec<f64>> {
    partition.check_grid(field.geometry())?;
    let rect = partition.zone(zone_index)?;
    let mut out = Vec::with_capacity(rect.n_cells());
    for row in rect.row_start..rect.row_end {
        for col in rect.col_start..rect.col_end {
            let cell = field.geometry().cell_index(row, col);
            if !field.is_missing(cell) {
                out.push(f64::from(field.values()[cell]));
            }
        }
    }
    Ok(out)
}

/// Per-cell wind speed `sqrt(u^2 + v^2)` from two component stacks that
/// share geometry and dates. A cell is missing in the output when it is
/// missing in either component.
pub fn wind_speed_from_components(u: &FieldStack, v: &FieldStack) -> Result<FieldStack> {
    if u.geometry() != v.geometry() {
        return Err(Error::GeometryMismatch {
            detail: "u and v stacks use different grids".into(),
        });
    }
    if u.len() != v.len() {
        return Err(Error::DateMismatch {
            day_index: u.len().min(v.len()),
        });
    }
    let mut days = Vec::with_capacity(u.len());
    for (i, (du, dv)) in u.days().iter().zip(v.days()).enumerate() {
        if du.date() != dv.date() {
            return Err(Error::DateMismatch { day_index: i });
        }
        let n = du.values().len();
        let mut values = Vec::with_capacity(n);
        let mut missing = vec![false; n];
        let mut any_missing = false;
        for (cell, miss) in missing.iter_mut().enumerate() {
            if du.is_missing(cell) || dv.is_missing(cell) {
                *miss = true;
                any_missing = true;
                values.push(0.0);
            } else {
                let su = f64::from(du.values()[cell]);
                let sv = f64::from(dv.values()[cell]);
                values.push((su * su + sv * sv).sqrt() as f32);
            }
        }
        let mask = if any_missing { Some(missing) } else { None };
        days.push(GridField::with_missing(*u.geometry(), du.date(), values, mask)?);
    }
    FieldStack::new(*u.geometry(), "wind_speed", "m/s", days)
}
