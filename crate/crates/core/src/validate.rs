//! Holdout accuracy: MAPE, rolling-origin cross-validation and a grid
//! search over pre-period length and trend type.

use std::io::{self, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gibbs::{fit, FitError, McmcConfig, ModelSpec, TrendKind};
use crate::impact::{expected_counterfactual, ImpactError};
use crate::series::{SeriesError, SeriesPanel};

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_HORIZON: usize = 42;
pub const MIN_TRAIN_DAYS: usize = 90;
/// Shortest training window a grid cell may shrink its folds to.
pub const MIN_GRID_TRAIN_DAYS: usize = 28;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("actual and predicted lengths differ ({actual} vs {predicted})")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("no days to score")]
    Empty,
    #[error("every actual value is zero or missing; MAPE is undefined")]
    AllZeroActuals,
    #[error("{available} days available, need at least {needed}")]
    InsufficientData { available: usize, needed: usize },
    #[error("fold count must be positive")]
    NoFolds,
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Impact(#[from] ImpactError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T, E = ValidateError> = std::result::Result<T, E>;

/// MAPE with the number of days left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapeSummary {
    pub percent: f64,
    pub scored: usize,
    pub excluded: usize,
}

/// Mean absolute percentage error, `100 × mean(|a − p| / a)`. Days whose
/// actual value is zero, negative or missing are skipped with a warning.
pub fn mape_detailed(actual: &[Option<f64>], predicted: &[f64]) -> Result<MapeSummary> {
    if actual.len() != predicted.len() {
        return Err(ValidateError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(ValidateError::Empty);
    }
    let mut total = 0.0;
    let mut scored = 0;
    for (a, p) in actual.iter().zip(predicted) {
        if let Some(a) = a.filter(|a| *a > 0.0) {
            total += (a - p).abs() / a;
            scored += 1;
        }
    }
    let excluded = actual.len() - scored;
    if scored == 0 {
        return Err(ValidateError::AllZeroActuals);
    }
    if excluded > 0 {
        log::warn!("MAPE skipped {excluded} day(s) with zero or missing actual values");
    }
    Ok(MapeSummary {
        percent: 100.0 * total / scored as f64,
        scored,
        excluded,
    })
}

pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    let actual: Vec<Option<f64>> = actual.iter().copied().map(Some).collect();
    Ok(mape_detailed(&actual, predicted)?.percent)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvOptions {
    pub folds: usize,
    pub horizon: usize,
    pub min_train: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            horizon: DEFAULT_HORIZON,
            min_train: MIN_TRAIN_DAYS,
        }
    }
}

/// Training lengths of the rolling origins over `n` days: evenly spaced
/// from `min_train` to `n − horizon`, so the last holdout ends on day `n`.
pub fn fold_origins(n: usize, options: &CvOptions) -> Result<Vec<usize>> {
    if options.folds == 0 {
        return Err(ValidateError::NoFolds);
    }
    let needed = options.horizon + options.min_train;
    if n < needed || options.horizon == 0 {
        return Err(ValidateError::InsufficientData {
            available: n,
            needed: needed.max(1),
        });
    }
    let last = n - options.horizon;
    if options.folds == 1 {
        return Ok(vec![last]);
    }
    let span = (last - options.min_train) as f64;
    let steps = (options.folds - 1) as f64;
    Ok((0..options.folds)
        .map(|k| options.min_train + (k as f64 * span / steps).round() as usize)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    /// Number of training days; the holdout starts at this index.
    pub origin: usize,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub holdout_start: NaiveDate,
    pub holdout_end: NaiveDate,
    pub mape: f64,
    pub excluded_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub spec: ModelSpec,
    pub options: CvOptions,
    pub folds: Vec<FoldReport>,
    pub average_mape: f64,
}

impl ValidationReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "fold,origin,train_start,train_end,holdout_start,holdout_end,mape,excluded_days")?;
        for (k, f) in self.folds.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                k + 1,
                f.origin,
                f.train_start,
                f.train_end,
                f.holdout_start,
                f.holdout_end,
                f.mape,
                f.excluded_days
            )?;
        }
        Ok(())
    }
}

/// Seed for one fold or grid cell, derived from the run seed.
pub fn derived_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Rolling-origin cross-validation of `spec` on a pre-period panel. Each
/// fold trains on the days before its origin and scores the posterior-mean
/// counterfactual on the next `horizon` days.
pub fn cross_validate(
    spec: &ModelSpec,
    panel: &SeriesPanel,
    options: &CvOptions,
    config: &McmcConfig,
) -> Result<ValidationReport> {
    config.validate()?;
    let origins = fold_origins(panel.len(), options)?;
    let folds = origins
        .par_iter()
        .enumerate()
        .map(|(k, &origin)| {
            let train = panel.slice(0, origin)?;
            let holdout = panel.slice(origin, options.horizon)?;
            let fold_config = McmcConfig {
                seed: derived_seed(config.seed, k),
                ..*config
            };
            let samples = fit(spec, &train, &fold_config)?;
            let predicted = expected_counterfactual(&samples, &holdout, options.horizon)?;
            let score = mape_detailed(holdout.treated.values(), &predicted)?;
            Ok(FoldReport {
                origin,
                train_start: train.start(),
                train_end: train.end(),
                holdout_start: holdout.start(),
                holdout_end: holdout.end(),
                mape: score.percent,
                excluded_days: score.excluded,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let average_mape = folds.iter().map(|f| f.mape).sum::<f64>() / folds.len() as f64;
    Ok(ValidationReport {
        spec: spec.clone(),
        options: *options,
        folds,
        average_mape,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Pre-period lengths in days, counted back from the intervention.
    pub lengths: Vec<usize>,
    pub trends: Vec<TrendKind>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lengths: vec![84, 126, 183, 400],
            trends: TrendKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub length: usize,
    pub trend: TrendKind,
    pub average_mape: Option<f64>,
    /// Why the cell could not be evaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// Evaluated cells, best (lowest average MAPE) first.
    pub ranked: Vec<GridCell>,
    pub flagged: Vec<GridCell>,
}

impl GridReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "rank,length,trend,average_mape,error")?;
        for (k, c) in self.ranked.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},",
                k + 1,
                c.length,
                c.trend.name(),
                c.average_mape.unwrap_or(f64::NAN)
            )?;
        }
        for c in &self.flagged {
            let msg = c.error.as_deref().unwrap_or("").replace(['"', ','], " ");
            writeln!(w, ",{},{},,{}", c.length, c.trend.name(), msg)?;
        }
        Ok(())
    }
}

/// Cross-validates every (length, trend) cell on the most recent `length`
/// days of `panel`. Cells that fail are flagged rather than aborting.
///
/// Windows too short for `min_train + horizon` train their first fold on
/// `length − horizon` days instead, down to `MIN_GRID_TRAIN_DAYS`.
pub fn grid_search(
    grid: &GridSpec,
    base: &ModelSpec,
    panel: &SeriesPanel,
    options: &CvOptions,
    config: &McmcConfig,
) -> Result<GridReport> {
    if grid.lengths.is_empty() || grid.trends.is_empty() {
        return Err(ValidateError::Empty);
    }
    let cells: Vec<(usize, TrendKind)> = grid
        .lengths
        .iter()
        .flat_map(|&l| grid.trends.iter().map(move |&t| (l, t)))
        .collect();
    let evaluated: Vec<GridCell> = cells
        .par_iter()
        .enumerate()
        .map(|(index, &(length, trend))| {
            let outcome = (|| -> Result<f64> {
                if length > panel.len() {
                    return Err(ValidateError::InsufficientData {
                        available: panel.len(),
                        needed: length,
                    });
                }
                let shrunk = options.min_train.min(length.saturating_sub(options.horizon));
                if shrunk < MIN_GRID_TRAIN_DAYS.min(options.min_train) {
                    return Err(ValidateError::InsufficientData {
                        available: length,
                        needed: options.horizon + MIN_GRID_TRAIN_DAYS.min(options.min_train),
                    });
                }
                let cell_options = CvOptions {
                    min_train: shrunk,
                    ..*options
                };
                let window = panel.slice(panel.len() - length, length)?;
                let spec = ModelSpec {
                    trend,
                    ..base.clone()
                };
                let cell_config = McmcConfig {
                    seed: derived_seed(config.seed, index),
                    ..*config
                };
                Ok(cross_validate(&spec, &window, &cell_options, &cell_config)?.average_mape)
            })();
            match outcome {
                Ok(m) => GridCell {
                    length,
                    trend,
                    average_mape: Some(m),
                    error: None,
                },
                Err(e) => {
                    log::warn!("grid cell ({length} days, {}) failed: {e}", trend.name());
                    GridCell {
                        length,
                        trend,
                        average_mape: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let (mut ranked, flagged): (Vec<GridCell>, Vec<GridCell>) = evaluated
        .into_iter()
        .partition(|c| c.average_mape.is_some_and(f64::is_finite));
    // stable sort keeps grid order among equal scores
    ranked.sort_by(|a, b| a.average_mape.unwrap().total_cmp(&b.average_mape.unwrap()));
    Ok(GridReport { ranked, flagged })
}
