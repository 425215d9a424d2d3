//! Counterfactual prediction for the post-intervention window and the
//! summary of actual versus counterfactual.

use std::io::{self, Write};

use chrono::{Duration, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gibbs::{standardized_offsets, FitError, PosteriorSamples};
use crate::series::{DateIndexedSeries, SeriesPanel};
use crate::state_space::{forecast, StateSpaceError};

pub const DEFAULT_CREDIBLE_LEVEL: f64 = 0.95;
pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Error)]
pub enum ImpactError {
    #[error("selected control `{0}` has no post-period data")]
    MissingPostCovariate(String),
    #[error("horizon must be between 1 and {available} days, got {horizon}")]
    InvalidHorizon { horizon: usize, available: usize },
    #[error("post-period panel starts on {found}, expected {expected}")]
    Misaligned { expected: NaiveDate, found: NaiveDate },
    #[error("counterfactual draw {draw} sums to {sum} over the window; relative effect is undefined")]
    DegenerateDraws { draw: usize, sum: f64 },
    #[error("need at least {MIN_DRAWS} counterfactual draws, got {0}")]
    TooFewDraws(usize),
    #[error("actual series has {actual} days, counterfactual has {horizon}")]
    LengthMismatch { actual: usize, horizon: usize },
    #[error("actual value missing on {0}")]
    MissingActual(NaiveDate),
    #[error("credible level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error(transparent)]
    Model(#[from] FitError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

pub type Result<T, E = ImpactError> = std::result::Result<T, E>;

/// Counterfactual paths on the original scale: one row per posterior draw,
/// one column per post-period day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualDraws {
    pub start: NaiveDate,
    pub paths: Vec<Vec<f64>>,
}

impl CounterfactualDraws {
    pub fn n_draws(&self) -> usize {
        self.paths.len()
    }

    pub fn horizon(&self) -> usize {
        self.paths.first().map_or(0, Vec::len)
    }

    pub fn day(&self, d: usize) -> impl Iterator<Item = f64> + '_ {
        self.paths.iter().map(move |p| p[d])
    }

    pub fn mean_path(&self) -> Vec<f64> {
        let k = self.n_draws() as f64;
        (0..self.horizon()).map(|d| self.day(d).sum::<f64>() / k).collect()
    }
}

/// Standardized post-period regressor columns matching the fitted design.
fn post_design(samples: &PosteriorSamples, post: &SeriesPanel, horizon: usize) -> Result<Vec<Vec<f64>>> {
    let ever_included: Vec<bool> = (0..samples.regressor_scales.len())
        .map(|j| samples.draws.iter().any(|d| d.inclusion[j]))
        .collect();
    samples
        .regressor_names()
        .enumerate()
        .map(|(j, name)| {
            let found = post.regressors().find(|s| s.name() == name);
            match found {
                Some(s) => Ok(s.values()[..horizon]
                    .iter()
                    .map(|v| samples.regressor_scales[j].apply(v.unwrap_or(f64::NAN)))
                    .collect()),
                None if ever_included[j] => Err(ImpactError::MissingPostCovariate(name.to_string())),
                None => Ok(vec![0.0; horizon]),
            }
        })
        .collect::<Result<Vec<Vec<f64>>>>()
        .and_then(|cols| {
            for (j, (col, name)) in cols.iter().zip(samples.regressor_names()).enumerate() {
                if ever_included[j] && col.iter().any(|v| v.is_nan()) {
                    return Err(ImpactError::MissingPostCovariate(name.to_string()));
                }
            }
            Ok(cols)
        })
}

fn check_horizon(samples: &PosteriorSamples, post: &SeriesPanel, horizon: usize) -> Result<()> {
    if horizon == 0 || horizon > post.len() {
        return Err(ImpactError::InvalidHorizon {
            horizon,
            available: post.len(),
        });
    }
    let expected = samples.start + Duration::days(samples.n_days as i64);
    if post.start() != expected {
        return Err(ImpactError::Misaligned {
            expected,
            found: post.start(),
        });
    }
    Ok(())
}

/// Simulates one counterfactual path per posterior draw: states forward
/// from the end of the training window, plus regression offset and
/// observation noise, mapped back to the original scale.
pub fn predict_counterfactual<R: Rng + ?Sized>(
    samples: &PosteriorSamples,
    post: &SeriesPanel,
    horizon: usize,
    rng: &mut R,
) -> Result<CounterfactualDraws> {
    check_horizon(samples, post, horizon)?;
    let columns = post_design(samples, post, horizon)?;
    let scale = samples.treated_scale;
    let mut paths = Vec::with_capacity(samples.len());
    for (i, draw) in samples.draws.iter().enumerate() {
        let model = samples.model_for_draw(i)?;
        let offsets = standardized_offsets(&columns, &draw.coefficients, horizon);
        let state = DVector::from_column_slice(&draw.final_state);
        let cov = DMatrix::zeros(model.dim(), model.dim());
        let fc = forecast(&model, &state, &cov, horizon, &offsets, 1, rng)?;
        let path = fc.paths.into_iter().next().expect("one path requested");
        paths.push(path.into_iter().map(|z| scale.invert(z)).collect());
    }
    Ok(CounterfactualDraws {
        start: post.start(),
        paths,
    })
}

/// Posterior mean of the counterfactual without observation noise: the
/// average over draws of each draw's expected path.
pub fn expected_counterfactual(
    samples: &PosteriorSamples,
    post: &SeriesPanel,
    horizon: usize,
) -> Result<Vec<f64>> {
    check_horizon(samples, post, horizon)?;
    let columns = post_design(samples, post, horizon)?;
    let mut total = vec![0.0; horizon];
    for (i, draw) in samples.draws.iter().enumerate() {
        let model = samples.model_for_draw(i)?;
        let offsets = standardized_offsets(&columns, &draw.coefficients, horizon);
        let mut state = DVector::from_column_slice(&draw.final_state);
        for (h, acc) in total.iter_mut().enumerate() {
            state = model.transition() * &state;
            *acc += model.z().dot(&state) + offsets[h];
        }
    }
    let k = samples.len() as f64;
    Ok(total
        .into_iter()
        .map(|z| samples.treated_scale.invert(z / k))
        .collect())
}

/// Sample quantile with linear interpolation between order statistics
/// (type 7). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    /// Mean and equal-tailed interval of `values`.
    pub fn from_draws(values: impl IntoIterator<Item = f64>, level: f64) -> Self {
        let mut v: Vec<f64> = values.into_iter().collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        Self {
            mean,
            lower: quantile(&v, tail),
            upper: quantile(&v, 1.0 - tail),
        }
    }

    /// Whether zero lies outside the closed interval.
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

/// Per-draw effects. Rows are draws, columns are days.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectDraws {
    pub pointwise: Vec<Vec<f64>>,
    pub cumulative: Vec<Vec<f64>>,
    /// Relative effect on window totals, in percent.
    pub relative: Vec<f64>,
}

fn actual_values(actual: &DateIndexedSeries, draws: &CounterfactualDraws) -> Result<Vec<f64>> {
    if actual.len() != draws.horizon() {
        return Err(ImpactError::LengthMismatch {
            actual: actual.len(),
            horizon: draws.horizon(),
        });
    }
    actual
        .values()
        .iter()
        .enumerate()
        .map(|(d, v)| v.ok_or_else(|| ImpactError::MissingActual(actual.date_at(d))))
        .collect()
}

pub fn effect_draws(actual: &DateIndexedSeries, draws: &CounterfactualDraws) -> Result<EffectDraws> {
    let y = actual_values(actual, draws)?;
    let actual_sum: f64 = y.iter().sum();
    let mut pointwise = Vec::with_capacity(draws.n_draws());
    let mut cumulative = Vec::with_capacity(draws.n_draws());
    let mut relative = Vec::with_capacity(draws.n_draws());
    for (i, path) in draws.paths.iter().enumerate() {
        let sum: f64 = path.iter().sum();
        if sum <= 0.0 {
            return Err(ImpactError::DegenerateDraws { draw: i, sum });
        }
        let p: Vec<f64> = y.iter().zip(path).map(|(a, c)| a - c).collect();
        let mut running = 0.0;
        let c: Vec<f64> = p
            .iter()
            .map(|e| {
                running += e;
                running
            })
            .collect();
        relative.push(100.0 * (actual_sum - sum) / sum);
        pointwise.push(p);
        cumulative.push(c);
    }
    Ok(EffectDraws {
        pointwise,
        cumulative,
        relative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayImpact {
    pub date: NaiveDate,
    pub actual: f64,
    pub counterfactual: Band,
    pub pointwise: Band,
    pub cumulative: Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub credible_level: f64,
    pub n_draws: usize,
    pub days: Vec<DayImpact>,
    pub actual_total: f64,
    pub counterfactual_total: Band,
    /// Percent change of the window total relative to the counterfactual.
    pub relative_effect: Band,
    /// One-sided posterior probability of the smaller tail of the final
    /// cumulative effect.
    pub tail_probability: f64,
    pub significant: bool,
}

impl ImpactReport {
    pub fn final_cumulative(&self) -> Band {
        self.days.last().expect("non-empty report").cumulative
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Per-day table with counterfactual, point-wise and cumulative bands.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "date,actual,counterfactual_mean,counterfactual_lower,counterfactual_upper,\
             pointwise_mean,pointwise_lower,pointwise_upper,\
             cumulative_mean,cumulative_lower,cumulative_upper"
        )?;
        for d in &self.days {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                d.date,
                d.actual,
                d.counterfactual.mean,
                d.counterfactual.lower,
                d.counterfactual.upper,
                d.pointwise.mean,
                d.pointwise.lower,
                d.pointwise.upper,
                d.cumulative.mean,
                d.cumulative.lower,
                d.cumulative.upper
            )?;
        }
        Ok(())
    }
}

/// Compares `actual` with the counterfactual draws over the post period.
pub fn compute_impact(
    actual: &DateIndexedSeries,
    draws: &CounterfactualDraws,
    level: f64,
) -> Result<ImpactReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(ImpactError::InvalidLevel(level));
    }
    if draws.n_draws() < MIN_DRAWS {
        return Err(ImpactError::TooFewDraws(draws.n_draws()));
    }
    let effects = effect_draws(actual, draws)?;
    let y = actual_values(actual, draws)?;
    let horizon = y.len();
    let days = (0..horizon)
        .map(|d| DayImpact {
            date: actual.date_at(d),
            actual: y[d],
            counterfactual: Band::from_draws(draws.day(d), level),
            pointwise: Band::from_draws(effects.pointwise.iter().map(|p| p[d]), level),
            cumulative: Band::from_draws(effects.cumulative.iter().map(|c| c[d]), level),
        })
        .collect::<Vec<_>>();

    let finals: Vec<f64> = effects.cumulative.iter().map(|c| c[horizon - 1]).collect();
    let k = finals.len() as f64;
    // exact zeros are split evenly between the two tails
    let below = finals.iter().filter(|&&v| v < 0.0).count() as f64;
    let above = finals.iter().filter(|&&v| v > 0.0).count() as f64;
    let ties = k - below - above;
    let at_most = (below + 0.5 * ties) / k;
    let at_least = (above + 0.5 * ties) / k;
    let significant = days[horizon - 1].cumulative.excludes_zero();

    Ok(ImpactReport {
        credible_level: level,
        n_draws: draws.n_draws(),
        days,
        actual_total: y.iter().sum(),
        counterfactual_total: Band::from_draws(draws.paths.iter().map(|p| p.iter().sum()), level),
        relative_effect: Band::from_draws(effects.relative.iter().copied(), level),
        tail_probability: at_most.min(at_least),
        significant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
    NoSignificantChange,
}

/// Direction of an effect given its credible interval; an interval that
/// touches zero is not significant.
pub fn classify(band: &Band) -> Direction {
    if band.lower > 0.0 {
        Direction::Increase
    } else if band.upper < 0.0 {
        Direction::Decrease
    } else {
        Direction::NoSignificantChange
    }
}

/// Plain-language summary of a relative effect interval (in percent).
pub fn describe(relative: &Band, level: f64, tail_probability: f64) -> String {
    let pct = 100.0 * level;
    match classify(relative) {
        Direction::Decrease => format!(
            "a {:.1}% decrease relative to the counterfactual, {pct:.0}% credible interval \
             [{:.1}%, {:.1}%] decrease; posterior tail probability {tail_probability:.3}",
            -relative.mean, -relative.upper, -relative.lower
        ),
        Direction::Increase => format!(
            "a {:.1}% increase relative to the counterfactual, {pct:.0}% credible interval \
             [{:.1}%, {:.1}%] increase; posterior tail probability {tail_probability:.3}",
            relative.mean, relative.lower, relative.upper
        ),
        Direction::NoSignificantChange => format!(
            "no significant change: estimated relative effect {:+.1}%, {pct:.0}% credible \
             interval [{:+.1}%, {:+.1}%] includes zero; posterior tail probability \
             {tail_probability:.3}",
            relative.mean, relative.lower, relative.upper
        ),
    }
}

/// Whether zero lies outside the final-day cumulative interval, with a
/// verdict phrased on the relative effect.
pub fn significance(report: &ImpactReport) -> (bool, String) {
    (
        report.significant,
        describe(
            &report.relative_effect,
            report.credible_level,
            report.tail_probability,
        ),
    )
}
