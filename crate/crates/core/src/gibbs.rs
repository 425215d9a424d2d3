//! Posterior sampler for the structural model with spike-and-slab
//! regression.
//!
//! Each iteration draws, in order:
//! 1. the state path given variances and the current regression offset
//!    (simulation smoother);
//! 2. every state innovation variance from its inverse-gamma conditional,
//!    plus the AR coefficient and long-run slope of a semi-local trend;
//! 3. inclusion indicators, coefficients and the observation variance on
//!    the residual `y_t − Z α_t`.
//!
//! Everything runs on the standardized scale of the training window.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{standardize, SeriesError, SeriesPanel, StandardizeParams};
use crate::spike_slab::{
    default_prior, gibbs_step, RegressionProblem, RegressionState, SpikeSlabError, SpikeSlabPrior,
};
use crate::state_space::{
    simulation_smoother, BlockKind, ComponentSpec, StateSpaceError, StateSpaceModel,
};

/// Degrees of freedom of the inverse-gamma prior on state innovation variances.
pub const VARIANCE_PRIOR_DF: f64 = 3.0;

/// Default prior guess for trend and seasonal innovation sds (standardized scale).
pub const DEFAULT_STATE_SD_GUESS: f64 = 0.01;

/// Lower bound applied to every variance draw.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("chain {chain}, iteration {iteration}: {source}")]
    StateSpace {
        chain: usize,
        iteration: usize,
        source: StateSpaceError,
    },
    #[error("chain {chain}, iteration {iteration}: {source}")]
    SpikeSlab {
        chain: usize,
        iteration: usize,
        source: SpikeSlabError,
    },
    #[error(transparent)]
    Model(#[from] StateSpaceError),
    #[error(transparent)]
    Prior(#[from] SpikeSlabError),
}

pub type Result<T, E = FitError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendKind {
    LocalLevel,
    LocalLinear,
    SemiLocalLinear,
    StaticIntercept,
}

impl TrendKind {
    pub const ALL: [TrendKind; 4] = [
        TrendKind::LocalLevel,
        TrendKind::LocalLinear,
        TrendKind::SemiLocalLinear,
        TrendKind::StaticIntercept,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TrendKind::LocalLevel => "local_level",
            TrendKind::LocalLinear => "local_linear",
            TrendKind::SemiLocalLinear => "semi_local_linear",
            TrendKind::StaticIntercept => "static_intercept",
        }
    }
}

/// Inverse-gamma prior on a variance: `1/σ² ~ Gamma(shape, rate = scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGammaPrior {
    /// Mode of the implied density of σ.
    pub fn sd_mode(&self) -> f64 {
        (2.0 * self.scale / (2.0 * self.shape + 1.0)).sqrt()
    }

    /// Draws σ² given `count` zero-mean residuals with sum of squares `ss`.
    pub fn sample_posterior<R: Rng + ?Sized>(&self, ss: f64, count: usize, rng: &mut R) -> f64 {
        let shape = self.shape + 0.5 * count as f64;
        let rate = self.scale + 0.5 * ss;
        let precision = Gamma::new(shape, 1.0 / rate)
            .expect("positive gamma parameters")
            .sample(rng);
        (1.0 / precision).max(VARIANCE_FLOOR)
    }
}

/// Prior for an innovation variance: `VARIANCE_PRIOR_DF` degrees of freedom
/// around a guess of the innovation sd.
pub fn variance_prior(sd_guess: f64) -> InverseGammaPrior {
    assert!(sd_guess > 0.0, "prior sd guess must be positive");
    InverseGammaPrior {
        shape: 0.5 * VARIANCE_PRIOR_DF,
        scale: 0.5 * VARIANCE_PRIOR_DF * sd_guess * sd_guess,
    }
}

/// Overrides for the regression prior. `None` keeps the default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionPriorSettings {
    pub expected_model_size: Option<f64>,
    pub information_weight: Option<f64>,
    pub residual_sd_guess: Option<f64>,
    pub residual_df: Option<f64>,
}

/// What to fit: trend type, optional seasonality and prior settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub trend: TrendKind,
    /// Period of the state seasonal component; `None` disables it.
    pub seasonal_period: Option<usize>,
    pub level_sd_guess: f64,
    pub slope_sd_guess: f64,
    pub seasonal_sd_guess: f64,
    /// Starting AR coefficient of a semi-local linear trend.
    pub initial_ar: f64,
    pub regression: RegressionPriorSettings,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            trend: TrendKind::LocalLevel,
            seasonal_period: Some(7),
            level_sd_guess: DEFAULT_STATE_SD_GUESS,
            slope_sd_guess: DEFAULT_STATE_SD_GUESS,
            seasonal_sd_guess: DEFAULT_STATE_SD_GUESS,
            initial_ar: 0.8,
            regression: RegressionPriorSettings::default(),
        }
    }
}

impl ModelSpec {
    pub fn new(trend: TrendKind) -> Self {
        Self {
            trend,
            ..Self::default()
        }
    }

    pub fn with_seasonal(mut self, period: Option<usize>) -> Self {
        self.seasonal_period = period;
        self
    }

    fn components(&self) -> Vec<ComponentSpec> {
        let mut out = vec![match self.trend {
            TrendKind::LocalLevel => ComponentSpec::LocalLevel {
                level_sd: self.level_sd_guess,
            },
            TrendKind::LocalLinear => ComponentSpec::LocalLinear {
                level_sd: self.level_sd_guess,
                slope_sd: self.slope_sd_guess,
            },
            TrendKind::SemiLocalLinear => ComponentSpec::SemiLocalLinear {
                level_sd: self.level_sd_guess,
                slope_sd: self.slope_sd_guess,
                ar: self.initial_ar,
                long_run_slope: 0.0,
            },
            TrendKind::StaticIntercept => ComponentSpec::StaticIntercept,
        }];
        if let Some(period) = self.seasonal_period {
            out.push(ComponentSpec::Seasonal {
                period,
                sd: self.seasonal_sd_guess,
            });
        }
        out
    }

    /// The structural model with prior-guess variances.
    pub fn base_model(&self) -> Result<StateSpaceModel> {
        Ok(StateSpaceModel::assemble(&self.components())?)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("level_sd_guess", self.level_sd_guess),
            ("slope_sd_guess", self.slope_sd_guess),
            ("seasonal_sd_guess", self.seasonal_sd_guess),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FitError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub chains: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            burn_in: 200,
            seed: 0,
            chains: 1,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.chains == 0 {
            return Err(FitError::InvalidConfig(
                "iterations and chains must be positive".into(),
            ));
        }
        if self.burn_in >= self.iterations {
            return Err(FitError::InvalidConfig(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    pub fn retained_per_chain(&self) -> usize {
        self.iterations - self.burn_in
    }
}

/// Independent random stream for one chain.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// One retained posterior draw, on the standardized scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub chain: usize,
    pub level_var: Option<f64>,
    pub slope_var: Option<f64>,
    pub seasonal_var: Option<f64>,
    pub obs_var: f64,
    pub ar: Option<f64>,
    pub long_run_slope: Option<f64>,
    pub inclusion: Vec<bool>,
    pub coefficients: Vec<f64>,
    /// Full state vector on the last training day.
    pub final_state: Vec<f64>,
    /// Trend level per training day.
    pub trend: Vec<f64>,
    /// Seasonal effect per training day (empty without a seasonal component).
    pub seasonal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub spec: ModelSpec,
    pub treated_scale: StandardizeParams,
    /// Per regressor column: controls first, then covariates.
    pub regressor_scales: Vec<StandardizeParams>,
    pub control_names: Vec<String>,
    pub covariate_names: Vec<String>,
    pub start: NaiveDate,
    pub n_days: usize,
    pub chains: usize,
    pub draws: Vec<Draw>,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn n_controls(&self) -> usize {
        self.control_names.len()
    }

    pub fn regressor_names(&self) -> impl Iterator<Item = &str> {
        self.control_names
            .iter()
            .chain(&self.covariate_names)
            .map(String::as_str)
    }

    /// Structural model carrying the variances and trend parameters of
    /// draw `i` (no regression offsets).
    pub fn model_for_draw(&self, i: usize) -> Result<StateSpaceModel> {
        let draw = &self.draws[i];
        let mut model = self.spec.base_model()?;
        apply_draw_parameters(&mut model, draw)?;
        Ok(model)
    }

    pub fn mean_obs_var(&self) -> f64 {
        self.draws.iter().map(|d| d.obs_var).sum::<f64>() / self.len() as f64
    }
}

fn apply_draw_parameters(model: &mut StateSpaceModel, draw: &Draw) -> Result<()> {
    let blocks = model.blocks().to_vec();
    for block in blocks {
        match block.kind {
            BlockKind::LocalLevel => {
                model.set_state_var(block.start, draw.level_var.unwrap_or(0.0));
            }
            BlockKind::LocalLinear | BlockKind::SemiLocalLinear => {
                model.set_state_var(block.start, draw.level_var.unwrap_or(0.0));
                model.set_state_var(block.start + 1, draw.slope_var.unwrap_or(0.0));
            }
            BlockKind::StaticIntercept => {}
            BlockKind::Seasonal { .. } => {
                model.set_state_var(block.start, draw.seasonal_var.unwrap_or(0.0));
            }
        }
    }
    if let (Some(ar), Some(slope)) = (draw.ar, draw.long_run_slope) {
        model.set_semi_local(ar, slope)?;
    }
    model.set_obs_var(draw.obs_var);
    Ok(())
}

/// Posterior inclusion probability of each control: the share of draws in
/// which its coefficient is non-zero.
pub fn inclusion_probabilities(samples: &PosteriorSamples) -> Vec<f64> {
    let k = samples.len() as f64;
    (0..samples.n_controls())
        .map(|j| samples.draws.iter().filter(|d| d.inclusion[j]).count() as f64 / k)
        .collect()
}

/// Posterior mean coefficient of each control over all draws (zeros
/// included), in treated sds per control sd.
pub fn standardized_coefficients(samples: &PosteriorSamples) -> Vec<f64> {
    let k = samples.len() as f64;
    (0..samples.n_controls())
        .map(|j| samples.draws.iter().map(|d| d.coefficients[j]).sum::<f64>() / k)
        .collect()
}

/// Standardized regressor columns and how they were scaled.
pub(crate) struct Design {
    pub columns: Vec<Vec<f64>>,
    pub scales: Vec<StandardizeParams>,
}

impl Design {
    fn from_panel(panel: &SeriesPanel) -> Result<Self> {
        let mut columns = Vec::new();
        let mut scales = Vec::new();
        for s in panel.regressors() {
            let (z, params) = standardize(s)?;
            columns.push(z.to_dense());
            scales.push(params);
        }
        Ok(Self { columns, scales })
    }

    fn offsets(&self, coefficients: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (col, &beta) in self.columns.iter().zip(coefficients) {
            if beta != 0.0 {
                for (o, x) in out.iter_mut().zip(col) {
                    *o += beta * x;
                }
            }
        }
        out
    }
}

/// Regression prior for the fit: spike-and-slab over controls, forced-in
/// covariates, and degenerate (constant) columns removed.
pub fn regression_prior(
    settings: &RegressionPriorSettings,
    n_controls: usize,
    n_covariates: usize,
    degenerate: &[bool],
) -> SpikeSlabPrior {
    let mut prior = default_prior(n_controls);
    if let Some(size) = settings.expected_model_size {
        prior = prior.with_expected_model_size(size);
    }
    if let Some(w) = settings.information_weight {
        prior.information_weight = w;
    }
    if let Some(s) = settings.residual_sd_guess {
        prior.residual_sd_guess = s;
    }
    if let Some(df) = settings.residual_df {
        prior.residual_df = df;
    }
    let mut prior = prior.with_forced_columns(n_covariates);
    for (j, &flat) in degenerate.iter().enumerate() {
        if flat {
            prior.exclude(j);
        }
    }
    prior
}

/// Samples the posterior of `spec` on the training `panel`.
pub fn fit(spec: &ModelSpec, panel: &SeriesPanel, config: &McmcConfig) -> Result<PosteriorSamples> {
    config.validate()?;
    spec.validate()?;
    let (treated, treated_scale) = standardize(&panel.treated)?;
    let y: Vec<Option<f64>> = treated.values().to_vec();
    let design = Design::from_panel(panel)?;
    let degenerate: Vec<bool> = design.scales.iter().map(|s| s.degenerate).collect();
    let prior = regression_prior(
        &spec.regression,
        panel.controls.len(),
        panel.covariates.len(),
        &degenerate,
    );
    let present: Vec<usize> = (0..y.len()).filter(|&t| y[t].is_some()).collect();
    let present_columns = design
        .columns
        .iter()
        .map(|c| present.iter().map(|&t| c[t]).collect())
        .collect();
    let problem = RegressionProblem::new(present_columns, &prior)?;
    let base = spec.base_model()?;

    let sampler = ChainSampler {
        spec,
        y: &y,
        present: &present,
        design: &design,
        prior: &prior,
        problem: &problem,
        base: &base,
        config,
    };
    let per_chain = (0..config.chains)
        .into_par_iter()
        .map(|c| sampler.run(c))
        .collect::<Result<Vec<_>>>()?;

    Ok(PosteriorSamples {
        spec: spec.clone(),
        treated_scale,
        regressor_scales: design.scales,
        control_names: panel.controls.iter().map(|s| s.name().to_string()).collect(),
        covariate_names: panel
            .covariates
            .iter()
            .map(|s| s.name().to_string())
            .collect(),
        start: panel.start(),
        n_days: panel.len(),
        chains: config.chains,
        draws: per_chain.into_iter().flatten().collect(),
    })
}

struct ChainSampler<'a> {
    spec: &'a ModelSpec,
    y: &'a [Option<f64>],
    present: &'a [usize],
    design: &'a Design,
    prior: &'a SpikeSlabPrior,
    problem: &'a RegressionProblem,
    base: &'a StateSpaceModel,
    config: &'a McmcConfig,
}

/// Noise-bearing state index and the prior it is drawn under.
struct VarianceSlot {
    index: usize,
    role: VarianceRole,
    prior: InverseGammaPrior,
}

#[derive(Clone, Copy, PartialEq)]
enum VarianceRole {
    Level,
    Slope,
    Seasonal,
}

impl ChainSampler<'_> {
    fn variance_slots(&self) -> Vec<VarianceSlot> {
        let mut slots = Vec::new();
        for block in self.base.blocks() {
            match block.kind {
                BlockKind::LocalLevel => slots.push(VarianceSlot {
                    index: block.start,
                    role: VarianceRole::Level,
                    prior: variance_prior(self.spec.level_sd_guess),
                }),
                BlockKind::LocalLinear | BlockKind::SemiLocalLinear => {
                    slots.push(VarianceSlot {
                        index: block.start,
                        role: VarianceRole::Level,
                        prior: variance_prior(self.spec.level_sd_guess),
                    });
                    slots.push(VarianceSlot {
                        index: block.start + 1,
                        role: VarianceRole::Slope,
                        prior: variance_prior(self.spec.slope_sd_guess),
                    });
                }
                BlockKind::StaticIntercept => {}
                BlockKind::Seasonal { .. } => slots.push(VarianceSlot {
                    index: block.start,
                    role: VarianceRole::Seasonal,
                    prior: variance_prior(self.spec.seasonal_sd_guess),
                }),
            }
        }
        slots
    }

    fn run(&self, chain: usize) -> Result<Vec<Draw>> {
        let mut rng = chain_rng(self.config.seed, chain);
        let n = self.y.len();
        let mut model = self.base.clone();
        model.set_obs_var(0.5);
        let slots = self.variance_slots();
        let trend_block = *model.trend_block().expect("trend component present");
        let seasonal_block = model.seasonal_block().copied();
        let semi_local = trend_block.kind == BlockKind::SemiLocalLinear;
        let mut ar = self.spec.initial_ar;
        let mut long_run_slope = 0.0;

        let mut regression = RegressionState::initial(self.prior, 0.5);
        let mut problem = self.problem.clone();
        let mut draws = Vec::with_capacity(self.config.retained_per_chain());
        let mut targets = vec![0.0; self.present.len()];

        for iteration in 0..self.config.iterations {
            let state_err = |source| FitError::StateSpace {
                chain,
                iteration,
                source,
            };
            model.set_offsets(self.design.offsets(&regression.coefficients, n));
            let path = simulation_smoother(&model, self.y, &mut rng).map_err(state_err)?;

            for slot in &slots {
                let transition = model.transition();
                let ss: f64 = path
                    .windows(2)
                    .map(|w| {
                        let predicted = transition.row(slot.index).dot(&w[0].transpose());
                        (w[1][slot.index] - predicted).powi(2)
                    })
                    .sum();
                let var = slot.prior.sample_posterior(ss, n - 1, &mut rng);
                model.set_state_var(slot.index, var);
            }
            if semi_local && n > 2 {
                let slope_var = model.state_var()[trend_block.start + 1];
                let slopes: Vec<f64> = path.iter().map(|a| a[trend_block.start + 1]).collect();
                long_run_slope = sample_long_run_slope(&slopes, ar, slope_var, &mut rng);
                ar = sample_ar(&slopes, long_run_slope, slope_var, ar, &mut rng);
                model.set_semi_local(ar, long_run_slope).map_err(state_err)?;
            }

            for (k, &t) in self.present.iter().enumerate() {
                targets[k] = self.y[t].expect("present day") - model.z().dot(&path[t]);
            }
            let slab_err = |source| FitError::SpikeSlab {
                chain,
                iteration,
                source,
            };
            problem.set_targets(&targets).map_err(slab_err)?;
            regression = gibbs_step(&regression, self.prior, &problem, &mut rng).map_err(slab_err)?;
            regression.residual_var = regression.residual_var.max(VARIANCE_FLOOR);
            model.set_obs_var(regression.residual_var);

            if iteration >= self.config.burn_in {
                let var_of = |role| {
                    slots
                        .iter()
                        .find(|s| s.role == role)
                        .map(|s| model.state_var()[s.index])
                };
                draws.push(Draw {
                    chain,
                    level_var: var_of(VarianceRole::Level),
                    slope_var: var_of(VarianceRole::Slope),
                    seasonal_var: var_of(VarianceRole::Seasonal),
                    obs_var: regression.residual_var,
                    ar: semi_local.then_some(ar),
                    long_run_slope: semi_local.then_some(long_run_slope),
                    inclusion: regression.inclusion.clone(),
                    coefficients: regression.coefficients.clone(),
                    final_state: path[n - 1].iter().copied().collect(),
                    trend: path.iter().map(|a| a[trend_block.start]).collect(),
                    seasonal: seasonal_block
                        .map(|b| path.iter().map(|a| a[b.start]).collect())
                        .unwrap_or_default(),
                });
            }
        }
        Ok(draws)
    }
}

/// Prior sd of the long-run slope on the standardized scale.
const LONG_RUN_SLOPE_PRIOR_SD: f64 = 1.0;

/// `δ_{t+1} − ρ δ_t = (1 − ρ) D + v_t` with `D ~ N(0, 1)`.
fn sample_long_run_slope<R: Rng + ?Sized>(slopes: &[f64], ar: f64, slope_var: f64, rng: &mut R) -> f64 {
    let w = 1.0 - ar;
    let count = (slopes.len() - 1) as f64;
    let sum: f64 = slopes.windows(2).map(|s| s[1] - ar * s[0]).sum();
    let precision = 1.0 / LONG_RUN_SLOPE_PRIOR_SD.powi(2) + count * w * w / slope_var;
    let mean = (w * sum / slope_var) / precision;
    mean + rng.sample::<f64, _>(StandardNormal) / precision.sqrt()
}

/// AR coefficient of the centred slope under a uniform prior on (−1, 1);
/// keeps the current value when the truncated draw keeps failing.
fn sample_ar<R: Rng + ?Sized>(
    slopes: &[f64],
    long_run_slope: f64,
    slope_var: f64,
    current: f64,
    rng: &mut R,
) -> f64 {
    let centred: Vec<f64> = slopes.iter().map(|s| s - long_run_slope).collect();
    let sxx: f64 = centred[..centred.len() - 1].iter().map(|d| d * d).sum();
    if sxx <= 0.0 {
        return current;
    }
    let sxy: f64 = centred.windows(2).map(|w| w[0] * w[1]).sum();
    let mean = sxy / sxx;
    let sd = (slope_var / sxx).sqrt();
    for _ in 0..100 {
        let draw = mean + sd * rng.sample::<f64, _>(StandardNormal);
        if draw.abs() < 1.0 {
            return draw;
        }
    }
    current
}

/// Posterior-mean one-step-ahead predictions on the standardized scale,
/// filtering with each draw's parameters (every `stride`-th draw).
pub fn one_step_predictions(
    samples: &PosteriorSamples,
    panel: &SeriesPanel,
    stride: usize,
) -> Result<Vec<f64>> {
    let (treated, _) = standardize(&panel.treated)?;
    let design = Design::from_panel(panel)?;
    let n = panel.len();
    let mut total = vec![0.0; n];
    let mut used = 0usize;
    for i in (0..samples.len()).step_by(stride.max(1)) {
        let mut model = samples.model_for_draw(i)?;
        model.set_offsets(design.offsets(&samples.draws[i].coefficients, n));
        let filter = crate::state_space::kalman_filter(&model, treated.values())?;
        for (t, v) in filter.forecast_mean.iter().enumerate() {
            total[t] += v;
        }
        used += 1;
    }
    Ok(total.into_iter().map(|v| v / used as f64).collect())
}

/// Regression offsets of `coefficients` applied to standardized columns.
pub(crate) fn standardized_offsets(
    columns: &[Vec<f64>],
    coefficients: &[f64],
    n: usize,
) -> Vec<f64> {
    Design {
        columns: columns.to_vec(),
        scales: Vec::new(),
    }
    .offsets(coefficients, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DateIndexedSeries;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()
    }

    fn samples_with(coefs: &[(bool, f64)]) -> PosteriorSamples {
        let draws = coefs
            .iter()
            .map(|&(on, beta)| Draw {
                chain: 0,
                level_var: Some(0.01),
                slope_var: None,
                seasonal_var: None,
                obs_var: 0.1,
                ar: None,
                long_run_slope: None,
                inclusion: vec![on],
                coefficients: vec![beta],
                final_state: vec![0.0],
                trend: vec![],
                seasonal: vec![],
            })
            .collect();
        PosteriorSamples {
            spec: ModelSpec::new(TrendKind::LocalLevel).with_seasonal(None),
            treated_scale: StandardizeParams::identity(),
            regressor_scales: vec![StandardizeParams::identity()],
            control_names: vec!["c".into()],
            covariate_names: vec![],
            start: date(),
            n_days: 0,
            chains: 1,
            draws,
        }
    }

    #[test]
    fn inclusion_probability_examples() {
        assert_eq!(inclusion_probabilities(&samples_with(&[(true, 1.0); 4])), vec![1.0]);
        assert_eq!(inclusion_probabilities(&samples_with(&[(false, 0.0); 4])), vec![0.0]);
        let half = samples_with(&[(true, 1.0), (false, 0.0), (true, 1.0), (false, 0.0)]);
        assert_eq!(inclusion_probabilities(&half), vec![0.5]);
    }

    #[test]
    fn standardized_coefficient_examples() {
        let all = standardized_coefficients(&samples_with(&[(true, 0.65); 5]));
        assert!((all[0] - 0.65).abs() < 1e-12);
        assert_eq!(standardized_coefficients(&samples_with(&[(false, 0.0); 3])), vec![0.0]);
        let half = samples_with(&[(true, 1.0), (false, 0.0)]);
        assert_eq!(standardized_coefficients(&half), vec![0.5]);
    }

    #[test]
    fn variance_prior_examples() {
        let p = variance_prior(0.01);
        assert_eq!(p.shape, 1.5);
        assert!((p.sd_mode() - 0.01).abs() < 0.15 * 0.01, "{}", p.sd_mode());
        let doubled = variance_prior(0.02);
        assert!((doubled.sd_mode() - 2.0 * p.sd_mode()).abs() < 1e-15);
        assert_eq!(doubled.shape, p.shape);
        assert_eq!(variance_prior(5.0).shape, 0.5 * VARIANCE_PRIOR_DF);
    }

    #[test]
    fn config_validation() {
        let bad = McmcConfig {
            iterations: 10,
            burn_in: 10,
            ..McmcConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(McmcConfig::default().validate().is_ok());
        assert_eq!(McmcConfig::default().retained_per_chain(), 800);
    }

    #[test]
    fn constant_series_concentrates_observation_variance() {
        let treated = DateIndexedSeries::from_values("y", date(), vec![42.0; 400]).unwrap();
        let panel = SeriesPanel::new(treated, vec![], vec![]).unwrap();
        let spec = ModelSpec::new(TrendKind::StaticIntercept).with_seasonal(None);
        let config = McmcConfig {
            iterations: 300,
            burn_in: 100,
            seed: 1,
            chains: 1,
        };
        let samples = fit(&spec, &panel, &config).unwrap();
        assert_eq!(samples.len(), 200);
        let above = samples.draws.iter().filter(|d| d.obs_var >= 1e-3).count();
        assert!(above <= samples.len() / 100, "{above} draws at or above 1e-3");
    }

    #[test]
    fn long_run_slope_and_ar_recover_a_known_slope_process() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, rho, sd) = (0.2, 0.6, 0.05);
        let mut slopes = vec![d];
        for _ in 0..2000 {
            let last = *slopes.last().unwrap();
            slopes.push(d + rho * (last - d) + sd * rng.sample::<f64, _>(StandardNormal));
        }
        let mut ar = 0.0;
        let mut sum_ar = 0.0;
        let mut sum_lr = 0.0;
        for _ in 0..500 {
            let lr = sample_long_run_slope(&slopes, ar, sd * sd, &mut rng);
            ar = sample_ar(&slopes, lr, sd * sd, ar, &mut rng);
            sum_ar += ar;
            sum_lr += lr;
        }
        assert!((sum_ar / 500.0 - rho).abs() < 0.05);
        assert!((sum_lr / 500.0 - d).abs() < 0.01);
    }
}
