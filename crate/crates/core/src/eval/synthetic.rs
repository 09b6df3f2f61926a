//! Synthetic field generators: planted-regime stacks for recovery tests,
//! and the localized-versus-spread and same-shape-shifted constructions
//! that demonstrate where plain Euclidean distance stops discriminating.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{FieldStack, GridField, GridGeometry, ZonePartition, ZoneRect};
use crate::quantize::BinEdges;

/// One planted weather regime.
#[derive(Debug, Clone)]
pub enum Regime {
    /// Every cell of zone `z` draws its bin from `mix[z]`, then a value
    /// inside that bin. Mixes are per-zone probability vectors over the
    /// histogram bins.
    ZoneMix(Vec<Vec<f64>>),
    /// A `rows x cols` block of constant `amplitude` dropped uniformly at
    /// random inside one zone; everything else stays zero.
    Blob {
        zone: usize,
        rows: usize,
        cols: usize,
        amplitude: f64,
    },
}

/// A planted clustering problem: regimes, the grid and zones they live
/// on, and the bin edges their mixes refer to.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub geometry: GridGeometry,
    pub partition: ZonePartition,
    pub edges: BinEdges,
    pub regimes: Vec<Regime>,
    pub days_per_regime: usize,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub variable: String,
    pub units: String,
}

impl SyntheticSpec {
    pub fn new(
        geometry: GridGeometry,
        partition: ZonePartition,
        edges: BinEdges,
        regimes: Vec<Regime>,
        days_per_regime: usize,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            geometry,
            partition,
            edges,
            regimes,
            days_per_regime,
            seed,
            start_date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            variable: "rainfall".into(),
            units: "mm".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() || self.days_per_regime == 0 {
            return Err(Error::Synthetic {
                detail: "at least one regime and one day per regime are required".into(),
            });
        }
        self.partition.check_grid(&self.geometry)?;
        for (r, regime) in self.regimes.iter().enumerate() {
            match regime {
                Regime::ZoneMix(mixes) => {
                    if mixes.len() != self.partition.len() {
                        return Err(Error::Synthetic {
                            detail: format!(
                                "regime {r} lists {} zone mixes for {} zones",
                                mixes.len(),
                                self.partition.len()
                            ),
                        });
                    }
                    for (z, mix) in mixes.iter().enumerate() {
                        if mix.len() != self.edges.bin_count() {
                            return Err(Error::Synthetic {
                                detail: format!(
                                    "regime {r} zone {z} mix has {} entries for {} bins",
                                    mix.len(),
                                    self.edges.bin_count()
                                ),
                            });
                        }
                        if mix.iter().any(|p| !p.is_finite() || *p < 0.0)
                            || mix.iter().sum::<f64>() <= 0.0
                        {
                            return Err(Error::Synthetic {
                                detail: format!("regime {r} zone {z} mix is not a weighting"),
                            });
                        }
                    }
                }
                Regime::Blob {
                    zone,
                    rows,
                    cols,
                    amplitude,
                } => {
                    let rect = self.partition.zone(*zone)?;
                    let fits = *rows >= 1
                        && *cols >= 1
                        && rect.row_start + rows <= rect.row_end
                        && rect.col_start + cols <= rect.col_end;
                    if !fits {
                        return Err(Error::Synthetic {
                            detail: format!("regime {r} blob does not fit inside zone {zone}"),
                        });
                    }
                    if !(amplitude.is_finite() && *amplitude > 0.0) {
                        return Err(Error::Synthetic {
                            detail: format!("regime {r} blob amplitude must be positive"),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// A value strictly inside the bin: 5% in from either end, so the f32
/// rounding on storage cannot push it across an edge. The zero bin yields
/// exactly zero and the open overflow bin uses a doubled-width stand-in.
fn sample_in_bin(rng: &mut ChaCha8Rng, edges: &BinEdges, bin: usize) -> f64 {
    let (lo, hi) = edges.bin_range(bin);
    if lo == hi {
        return lo;
    }
    let hi = if hi.is_finite() {
        hi
    } else if lo > 0.0 {
        2.0 * lo
    } else {
        lo + 1.0
    };
    lo + (0.05 + 0.90 * rng.random::<f64>()) * (hi - lo)
}

fn sample_bin(rng: &mut ChaCha8Rng, mix: &[f64]) -> usize {
    let total: f64 = mix.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (bin, &w) in mix.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = bin;
            if u < acc {
                return bin;
            }
        }
    }
    last
}

/// Generates `regimes x days_per_regime` days, regime-major, along with
/// the true regime label of each day. The same spec always produces the
/// same stack.
pub fn generate(spec: &SyntheticSpec) -> Result<(FieldStack, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_cells = spec.geometry.n_cells();
    let mut days = Vec::with_capacity(spec.regimes.len() * spec.days_per_regime);
    let mut labels = Vec::with_capacity(days.capacity());
    for (r, regime) in spec.regimes.iter().enumerate() {
        for d in 0..spec.days_per_regime {
            let day_index = (r * spec.days_per_regime + d) as u64;
            let date = spec
                .start_date
                .checked_add_days(Days::new(day_index))
                .ok_or_else(|| Error::Synthetic {
                    detail: "date range overflow".into(),
                })?;
            let mut values = vec![0.0f32; n_cells];
            match regime {
                Regime::ZoneMix(mixes) => {
                    for (zone, mix) in spec.partition.zones().iter().zip(mixes) {
                        for row in zone.row_start..zone.row_end {
                            for col in zone.col_start..zone.col_end {
                                let bin = sample_bin(&mut rng, mix);
                                let v = sample_in_bin(&mut rng, &spec.edges, bin);
                                values[spec.geometry.cell_index(row, col)] = v as f32;
                            }
                        }
                    }
                }
                Regime::Blob {
                    zone,
                    rows,
                    cols,
                    amplitude,
                } => {
                    let rect = spec.partition.zone(*zone)?;
                    let row0 = rect.row_start
                        + rng.random_range(0..=(rect.row_end - rect.row_start - rows));
                    let col0 = rect.col_start
                        + rng.random_range(0..=(rect.col_end - rect.col_start - cols));
                    for row in row0..row0 + rows {
                        for col in col0..col0 + cols {
                            values[spec.geometry.cell_index(row, col)] = *amplitude as f32;
                        }
                    }
                }
            }
            days.push(GridField::new(spec.geometry, date, values)?);
            labels.push(r);
        }
    }
    let stack = FieldStack::new(spec.geometry, &spec.variable, &spec.units, days)?;
    Ok((stack, labels))
}

fn dated_zeros(geometry: GridGeometry, day: u64) -> Result<GridField> {
    let date = NaiveDate::from_ymd_opt(2000, 1, 1)
        .unwrap()
        .checked_add_days(Days::new(day))
        .unwrap();
    GridField::zeros(geometry, date)
}

/// Localized-versus-spread triple: a zero field, a single cell holding
/// `amplitude`, and `amplitude^2` unit cells strewn on a regular lattice.
/// Both non-zero fields sit at Euclidean distance `amplitude` from the
/// zero field, yet their zone histograms differ sharply.
pub fn localized_vs_spread(
    geometry: GridGeometry,
    amplitude: u32,
) -> Result<(GridField, GridField, GridField)> {
    if amplitude < 2 {
        return Err(Error::Synthetic {
            detail: "amplitude must be at least 2".into(),
        });
    }
    let reference = dated_zeros(geometry, 0)?;

    let mut spike = vec![0.0f32; geometry.n_cells()];
    spike[geometry.cell_index(geometry.n_rows / 4, geometry.n_cols / 4)] = amplitude as f32;
    let localized = GridField::new(geometry, dated_zeros(geometry, 1)?.date(), spike)?;

    let needed = (amplitude as usize).pow(2);
    let stride = ((geometry.n_cells() as f64 / needed as f64).sqrt().floor() as usize).max(1);
    let mut lattice = vec![0.0f32; geometry.n_cells()];
    let mut placed = 0;
    'rows: for row in (0..geometry.n_rows).step_by(stride) {
        for col in (0..geometry.n_cols).step_by(stride) {
            lattice[geometry.cell_index(row, col)] = 1.0;
            placed += 1;
            if placed == needed {
                break 'rows;
            }
        }
    }
    if placed < needed {
        return Err(Error::Synthetic {
            detail: format!(
                "grid of {} cells cannot host {} lattice points",
                geometry.n_cells(),
                needed
            ),
        });
    }
    let spread = GridField::new(geometry, dated_zeros(geometry, 2)?.date(), lattice)?;
    Ok((reference, localized, spread))
}

fn bar_field(
    geometry: GridGeometry,
    rect: &ZoneRect,
    col: usize,
    amplitude: f64,
    day: u64,
) -> Result<GridField> {
    let mut values = vec![0.0f32; geometry.n_cells()];
    for row in rect.row_start..rect.row_end {
        values[geometry.cell_index(row, col)] = amplitude as f32;
    }
    GridField::new(geometry, dated_zeros(geometry, day)?.date(), values)
}

/// Same-shape-shifted triple: a one-cell-wide vertical bar, the same bar
/// moved one column over inside the same zone, and the same bar placed in
/// the next zone. The two moves are Euclidean-identical, but only the
/// cross-zone move registers under zone histograms.
pub fn shifted_bar(
    geometry: GridGeometry,
    partition: &ZonePartition,
    amplitude: f64,
) -> Result<(GridField, GridField, GridField)> {
    if partition.len() < 2 {
        return Err(Error::Synthetic {
            detail: "two zones are required".into(),
        });
    }
    partition.check_grid(&geometry)?;
    let home = partition.zone(0)?;
    let away = partition.zone(1)?;
    if home.col_end - home.col_start < 3 || away.col_end - away.col_start < 2 {
        return Err(Error::Synthetic {
            detail: "zones are too narrow for a one-column shift".into(),
        });
    }
    if home.row_end - home.row_start != away.row_end - away.row_start {
        return Err(Error::Synthetic {
            detail: "the first two zones must span the same number of rows".into(),
        });
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::Synthetic {
            detail: "amplitude must be positive".into(),
        });
    }
    let reference = bar_field(geometry, home, home.col_start + 1, amplitude, 0)?;
    let within = bar_field(geometry, home, home.col_start + 2, amplitude, 1)?;
    let across = bar_field(geometry, away, away.col_start + 1, amplitude, 2)?;
    Ok((reference, within, across))
}
