//! Synthetic daily series with known components, and intervention
//! injection for calibration studies.

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gibbs::TrendKind;
use crate::series::{mean_sd, DateIndexedSeries, SeriesError, SeriesPanel};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("intervention start {start} is outside {first}..={last}")]
    StartOutOfRange {
        start: NaiveDate,
        first: NaiveDate,
        last: NaiveDate,
    },
    #[error("intervention magnitude {0} must exceed -1")]
    InvalidMagnitude(f64),
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

/// Where a control series gets its signal from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentSource {
    /// A random walk shared by all `Shared` controls; enters the target
    /// only through the control coefficients.
    Shared,
    /// The target's own trend component.
    Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRecipe {
    pub name: String,
    /// Coefficient of the control in the target equation.
    pub beta: f64,
    /// Sample correlation of the control with its latent driver.
    pub correlation: f64,
    pub source: LatentSource,
    /// Constant added to the control.
    #[serde(default)]
    pub level: f64,
}

impl ControlRecipe {
    pub fn shared(name: impl Into<String>, beta: f64, correlation: f64) -> Self {
        Self {
            name: name.into(),
            beta,
            correlation,
            source: LatentSource::Shared,
            level: 0.0,
        }
    }

    pub fn tracking_trend(name: impl Into<String>, correlation: f64) -> Self {
        Self {
            name: name.into(),
            beta: 0.0,
            correlation,
            source: LatentSource::Trend,
            level: 0.0,
        }
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalTruth {
    pub period: usize,
    pub sd: f64,
    /// Sd of the initial seasonal pattern.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub start: NaiveDate,
    pub length: usize,
    pub seed: u64,
    pub treated_name: String,
    pub trend: TrendKind,
    /// Initial level (the constant for a static intercept).
    pub intercept: f64,
    pub level_sd: f64,
    pub initial_slope: f64,
    pub slope_sd: f64,
    pub ar: f64,
    pub long_run_slope: f64,
    pub seasonal: Option<SeasonalTruth>,
    pub obs_sd: f64,
    /// Innovation sd of the shared latent random walk.
    pub latent_sd: f64,
    pub controls: Vec<ControlRecipe>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            length: 442,
            seed: 0,
            treated_name: "treated".into(),
            trend: TrendKind::LocalLevel,
            intercept: 1000.0,
            level_sd: 5.0,
            initial_slope: 0.0,
            slope_sd: 0.0,
            ar: 0.0,
            long_run_slope: 0.0,
            seasonal: None,
            obs_sd: 10.0,
            latent_sd: 1.0,
            controls: Vec::new(),
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(SynthError::InvalidSpec("length must be positive".into()));
        }
        let sds = [
            self.level_sd,
            self.slope_sd,
            self.obs_sd,
            self.latent_sd,
            self.seasonal.as_ref().map_or(0.0, |s| s.sd),
            self.seasonal.as_ref().map_or(0.0, |s| s.amplitude),
        ];
        if sds.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(SynthError::InvalidSpec(
                "standard deviations must be finite and non-negative".into(),
            ));
        }
        if let Some(s) = &self.seasonal {
            if s.period < 2 {
                return Err(SynthError::InvalidSpec("seasonal period must be at least 2".into()));
            }
        }
        for c in &self.controls {
            if !(c.correlation > 0.0 && c.correlation <= 1.0) {
                return Err(SynthError::InvalidSpec(format!(
                    "control {} needs a correlation in (0, 1]",
                    c.name
                )));
            }
        }
        Ok(())
    }
}

/// Hidden components of a generated series, one value per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub level: Vec<f64>,
    pub slope: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub regression: Vec<f64>,
    pub noise: Vec<f64>,
    pub latent: Vec<f64>,
}

impl SynthTruth {
    /// `μ_t + τ_t + βᵀx_t + ε_t`.
    pub fn observation(&self, t: usize) -> f64 {
        self.level[t] + self.seasonal[t] + self.regression[t] + self.noise[t]
    }
}

/// Simulates the structural model forward.
pub fn generate(spec: &SynthSpec) -> Result<(SeriesPanel, SynthTruth)> {
    spec.validate()?;
    let n = spec.length;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };

    let mut level = Vec::with_capacity(n);
    let mut slope = Vec::with_capacity(n);
    let (mut mu, mut delta) = (spec.intercept, spec.initial_slope);
    for _ in 0..n {
        level.push(mu);
        slope.push(delta);
        match spec.trend {
            TrendKind::StaticIntercept => {}
            TrendKind::LocalLevel => mu += spec.level_sd * normal(),
            TrendKind::LocalLinear => {
                mu += delta + spec.level_sd * normal();
                delta += spec.slope_sd * normal();
            }
            TrendKind::SemiLocalLinear => {
                mu += delta + spec.level_sd * normal();
                delta = spec.long_run_slope
                    + spec.ar * (delta - spec.long_run_slope)
                    + spec.slope_sd * normal();
            }
        }
    }
    if spec.trend == TrendKind::LocalLevel {
        slope.iter_mut().for_each(|d| *d = 0.0);
    }

    let seasonal = match &spec.seasonal {
        None => vec![0.0; n],
        Some(s) => {
            // history[0] is the most recent effect
            let mut history: Vec<f64> = (0..s.period - 1).map(|_| s.amplitude * normal()).collect();
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let next = -history.iter().sum::<f64>() + s.sd * normal();
                history.rotate_right(1);
                history[0] = next;
                out.push(next);
            }
            out
        }
    };

    let mut latent = Vec::with_capacity(n);
    let mut l = 0.0;
    for _ in 0..n {
        latent.push(l);
        l += spec.latent_sd * normal();
    }

    let mut controls = Vec::with_capacity(spec.controls.len());
    let mut regression = vec![0.0; n];
    for recipe in &spec.controls {
        let driver = match recipe.source {
            LatentSource::Shared => &latent,
            LatentSource::Trend => &level,
        };
        let driver_sd = if n > 1 { mean_sd(driver).1 } else { 0.0 };
        let r = recipe.correlation;
        let noise_sd = driver_sd * (1.0 / (r * r) - 1.0).sqrt();
        let values: Vec<f64> = driver
            .iter()
            .map(|d| recipe.level + d + noise_sd * normal())
            .collect();
        for (acc, x) in regression.iter_mut().zip(&values) {
            *acc += recipe.beta * x;
        }
        controls.push(DateIndexedSeries::from_values(
            recipe.name.clone(),
            spec.start,
            values,
        )?);
    }

    let noise: Vec<f64> = (0..n).map(|_| spec.obs_sd * normal()).collect();
    let truth = SynthTruth {
        level,
        slope,
        seasonal,
        regression,
        noise,
        latent,
    };
    let y: Vec<f64> = (0..n).map(|t| truth.observation(t)).collect();
    let treated = DateIndexedSeries::from_values(spec.treated_name.clone(), spec.start, y)?;
    Ok((SeriesPanel::new(treated, controls, Vec::new())?, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "duration")]
pub enum InterventionKind {
    Step,
    /// Applies for the given number of days.
    Pulse(usize),
    /// Fades linearly to zero over the given number of days.
    LinearDecay(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    #[serde(flatten)]
    pub kind: InterventionKind,
    pub start: NaiveDate,
    /// Relative change, e.g. `-0.03` for a 3% drop.
    pub magnitude: f64,
}

impl Intervention {
    pub fn step(start: NaiveDate, magnitude: f64) -> Self {
        Self {
            kind: InterventionKind::Step,
            start,
            magnitude,
        }
    }

    /// Multiplier applied `k` days after the start.
    fn factor(&self, k: usize) -> f64 {
        let m = match self.kind {
            InterventionKind::Step => self.magnitude,
            InterventionKind::Pulse(d) if k < d => self.magnitude,
            InterventionKind::LinearDecay(d) if k < d => {
                self.magnitude * (1.0 - k as f64 / d as f64)
            }
            _ => 0.0,
        };
        1.0 + m
    }
}

/// Applies `intervention` multiplicatively from its start date onward.
pub fn inject(series: &DateIndexedSeries, intervention: &Intervention) -> Result<DateIndexedSeries> {
    if !(intervention.magnitude > -1.0) {
        return Err(SynthError::InvalidMagnitude(intervention.magnitude));
    }
    let first = series.start();
    let last = series.end();
    let Some(offset) = series.index_of(intervention.start) else {
        return Err(SynthError::StartOutOfRange {
            start: intervention.start,
            first,
            last,
        });
    };
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(t, v)| {
            if t < offset {
                *v
            } else {
                v.map(|x| x * intervention.factor(t - offset))
            }
        })
        .collect();
    Ok(DateIndexedSeries::new(series.name(), first, values)?)
}

/// First day after a pre-period of `pre_days` starting at `start`.
pub fn intervention_date(start: NaiveDate, pre_days: usize) -> NaiveDate {
    start + Duration::days(pre_days as i64)
}
