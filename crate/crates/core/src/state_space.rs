//! Linear Gaussian state-space models with a scalar observation.
//!
//! ```text
//! y_t       = Z α_t + r_t + ε_t,   ε_t ~ N(0, H)
//! α_{t+1}   = T α_t + η_t,         η_t ~ N(0, diag(q))
//! α_1       ~ N(a_1, P_1)
//! ```
//!
//! `r_t` is a known per-day offset (the regression contribution). Models
//! are assembled from trend/seasonal components, each occupying one
//! contiguous block of the state vector. The filter, smoother and
//! simulation smoother follow the Durbin & Koopman formulation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Initial variance for diffuse states, on the standardized data scale.
pub const DIFFUSE_VARIANCE: f64 = 1e6;

/// Prediction variances within this many ulps of zero (relative to the
/// initial state variance) carry no information: the update is skipped
/// instead of dividing by round-off.
const DEGENERATE_ULPS: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateSpaceError {
    #[error("more than one trend component")]
    DuplicateTrend,
    #[error("more than one seasonal component")]
    DuplicateSeasonal,
    #[error("model has no state components")]
    NoStates,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("prediction variance {variance} is negative at t = {t}")]
    NumericalFailure { t: usize, variance: f64 },
    #[error("no observations")]
    NoObservations,
}

pub type Result<T, E = StateSpaceError> = std::result::Result<T, E>;

/// Declarative building block of a structural model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComponentSpec {
    /// Random-walk level.
    LocalLevel { level_sd: f64 },
    /// Random-walk level plus random-walk slope.
    LocalLinear { level_sd: f64, slope_sd: f64 },
    /// Random-walk level plus an AR(1) slope reverting to `long_run_slope`.
    SemiLocalLinear {
        level_sd: f64,
        slope_sd: f64,
        ar: f64,
        long_run_slope: f64,
    },
    /// Constant level.
    StaticIntercept,
    /// Dummy-variable seasonal with `period` seasons.
    Seasonal { period: usize, sd: f64 },
    /// Known regression contribution `Σ_j coefficients[j] · columns[j][t]`.
    Regression {
        columns: Vec<Vec<f64>>,
        coefficients: Vec<f64>,
    },
}

impl ComponentSpec {
    pub fn weekly(sd: f64) -> Self {
        Self::Seasonal { period: 7, sd }
    }

    fn is_trend(&self) -> bool {
        matches!(
            self,
            Self::LocalLevel { .. }
                | Self::LocalLinear { .. }
                | Self::SemiLocalLinear { .. }
                | Self::StaticIntercept
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    LocalLevel,
    LocalLinear,
    /// Level, slope, and a constant-one state carrying the long-run slope.
    SemiLocalLinear,
    StaticIntercept,
    Seasonal { period: usize },
}

/// Where a component lives in the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateBlock {
    pub kind: BlockKind,
    pub start: usize,
    pub len: usize,
}

impl StateBlock {
    pub fn is_trend(&self) -> bool {
        !matches!(self.kind, BlockKind::Seasonal { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    blocks: Vec<StateBlock>,
    z: DVector<f64>,
    transition: DMatrix<f64>,
    state_var: DVector<f64>,
    obs_var: f64,
    offset: Vec<f64>,
    init_mean: DVector<f64>,
    init_cov: DMatrix<f64>,
}

fn check_sd(name: &str, sd: f64) -> Result<()> {
    if sd.is_finite() && sd >= 0.0 {
        Ok(())
    } else {
        Err(StateSpaceError::InvalidParameter(format!(
            "{name} must be a finite non-negative sd, got {sd}"
        )))
    }
}

impl StateSpaceModel {
    /// Composes components block-diagonally. The observation variance
    /// starts at zero; set it with [`Self::with_obs_var`].
    pub fn assemble(components: &[ComponentSpec]) -> Result<Self> {
        let trends = components.iter().filter(|c| c.is_trend()).count();
        if trends > 1 {
            return Err(StateSpaceError::DuplicateTrend);
        }
        let seasonals = components
            .iter()
            .filter(|c| matches!(c, ComponentSpec::Seasonal { .. }))
            .count();
        if seasonals > 1 {
            return Err(StateSpaceError::DuplicateSeasonal);
        }

        // (kind, transition block, noise variances, initial means, initial variances)
        let mut parts = Vec::new();
        let mut offset: Vec<f64> = Vec::new();
        for c in components {
            match *c {
                ComponentSpec::LocalLevel { level_sd } => {
                    check_sd("level_sd", level_sd)?;
                    parts.push((
                        BlockKind::LocalLevel,
                        DMatrix::from_element(1, 1, 1.0),
                        vec![level_sd * level_sd],
                        vec![0.0],
                        vec![DIFFUSE_VARIANCE],
                    ));
                }
                ComponentSpec::LocalLinear { level_sd, slope_sd } => {
                    check_sd("level_sd", level_sd)?;
                    check_sd("slope_sd", slope_sd)?;
                    parts.push((
                        BlockKind::LocalLinear,
                        DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
                        vec![level_sd * level_sd, slope_sd * slope_sd],
                        vec![0.0, 0.0],
                        vec![DIFFUSE_VARIANCE; 2],
                    ));
                }
                ComponentSpec::SemiLocalLinear {
                    level_sd,
                    slope_sd,
                    ar,
                    long_run_slope,
                } => {
                    check_sd("level_sd", level_sd)?;
                    check_sd("slope_sd", slope_sd)?;
                    check_ar(ar, long_run_slope)?;
                    parts.push((
                        BlockKind::SemiLocalLinear,
                        semi_local_transition(ar, long_run_slope),
                        vec![level_sd * level_sd, slope_sd * slope_sd, 0.0],
                        vec![0.0, 0.0, 1.0],
                        vec![DIFFUSE_VARIANCE, DIFFUSE_VARIANCE, 0.0],
                    ));
                }
                ComponentSpec::StaticIntercept => parts.push((
                    BlockKind::StaticIntercept,
                    DMatrix::from_element(1, 1, 1.0),
                    vec![0.0],
                    vec![0.0],
                    vec![DIFFUSE_VARIANCE],
                )),
                ComponentSpec::Seasonal { period, sd } => {
                    if period < 2 {
                        return Err(StateSpaceError::InvalidParameter(format!(
                            "seasonal period must be at least 2, got {period}"
                        )));
                    }
                    check_sd("seasonal sd", sd)?;
                    let k = period - 1;
                    let mut t = DMatrix::zeros(k, k);
                    t.row_mut(0).fill(-1.0);
                    for i in 1..k {
                        t[(i, i - 1)] = 1.0;
                    }
                    let mut q = vec![0.0; k];
                    q[0] = sd * sd;
                    parts.push((
                        BlockKind::Seasonal { period },
                        t,
                        q,
                        vec![0.0; k],
                        vec![DIFFUSE_VARIANCE; k],
                    ));
                }
                ComponentSpec::Regression {
                    ref columns,
                    ref coefficients,
                } => {
                    if columns.len() != coefficients.len() {
                        return Err(StateSpaceError::DimensionMismatch(format!(
                            "{} regression columns but {} coefficients",
                            columns.len(),
                            coefficients.len()
                        )));
                    }
                    for (col, beta) in columns.iter().zip(coefficients) {
                        if offset.is_empty() {
                            offset = vec![0.0; col.len()];
                        }
                        if col.len() != offset.len() {
                            return Err(StateSpaceError::DimensionMismatch(
                                "regression columns differ in length".into(),
                            ));
                        }
                        for (o, x) in offset.iter_mut().zip(col) {
                            *o += beta * x;
                        }
                    }
                }
            }
        }

        let m: usize = parts.iter().map(|p| p.1.nrows()).sum();
        if m == 0 {
            return Err(StateSpaceError::NoStates);
        }
        let mut model = Self {
            blocks: Vec::with_capacity(parts.len()),
            z: DVector::zeros(m),
            transition: DMatrix::zeros(m, m),
            state_var: DVector::zeros(m),
            obs_var: 0.0,
            offset,
            init_mean: DVector::zeros(m),
            init_cov: DMatrix::zeros(m, m),
        };
        let mut start = 0;
        for (kind, t, q, a, p) in parts {
            let len = t.nrows();
            model
                .transition
                .view_mut((start, start), (len, len))
                .copy_from(&t);
            for i in 0..len {
                model.state_var[start + i] = q[i];
                model.init_mean[start + i] = a[i];
                model.init_cov[(start + i, start + i)] = p[i];
            }
            // Level or first seasonal state is observed.
            model.z[start] = 1.0;
            model.blocks.push(StateBlock { kind, start, len });
            start += len;
        }
        Ok(model)
    }

    /// Builds a model from explicit system matrices with no block structure
    /// beyond a single anonymous block.
    pub fn from_parts(
        z: DVector<f64>,
        transition: DMatrix<f64>,
        state_var: DVector<f64>,
        obs_var: f64,
        init_mean: DVector<f64>,
        init_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let m = z.len();
        if m == 0 {
            return Err(StateSpaceError::NoStates);
        }
        if transition.shape() != (m, m)
            || state_var.len() != m
            || init_mean.len() != m
            || init_cov.shape() != (m, m)
        {
            return Err(StateSpaceError::DimensionMismatch(format!(
                "state dimension {m} inconsistent across system matrices"
            )));
        }
        if state_var.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(StateSpaceError::InvalidParameter(
                "state variances must be finite and non-negative".into(),
            ));
        }
        check_sd("observation variance", obs_var)?;
        Ok(Self {
            blocks: vec![StateBlock {
                kind: BlockKind::LocalLevel,
                start: 0,
                len: m,
            }],
            z,
            transition,
            state_var,
            obs_var,
            offset: Vec::new(),
            init_mean,
            init_cov,
        })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn blocks(&self) -> &[StateBlock] {
        &self.blocks
    }

    pub fn trend_block(&self) -> Option<&StateBlock> {
        self.blocks.iter().find(|b| b.is_trend())
    }

    pub fn seasonal_block(&self) -> Option<&StateBlock> {
        self.blocks.iter().find(|b| !b.is_trend())
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    /// Diagonal of the state noise covariance.
    pub fn state_var(&self) -> &DVector<f64> {
        &self.state_var
    }

    pub fn obs_var(&self) -> f64 {
        self.obs_var
    }

    pub fn init_mean(&self) -> &DVector<f64> {
        &self.init_mean
    }

    pub fn init_cov(&self) -> &DMatrix<f64> {
        &self.init_cov
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offset
    }

    pub fn offset_at(&self, t: usize) -> f64 {
        self.offset.get(t).copied().unwrap_or(0.0)
    }

    pub fn with_obs_var(mut self, variance: f64) -> Self {
        self.obs_var = variance;
        self
    }

    pub fn set_obs_var(&mut self, variance: f64) {
        self.obs_var = variance;
    }

    pub fn set_state_var(&mut self, index: usize, variance: f64) {
        self.state_var[index] = variance;
    }

    /// Per-day regression offset; an empty vector means zero.
    pub fn set_offsets(&mut self, offset: Vec<f64>) {
        self.offset = offset;
    }

    pub fn with_offsets(mut self, offset: Vec<f64>) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_init(mut self, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        self.init_mean = mean;
        self.init_cov = cov;
        self
    }

    /// Updates the AR coefficient and long-run slope of a semi-local
    /// linear trend block.
    pub fn set_semi_local(&mut self, ar: f64, long_run_slope: f64) -> Result<()> {
        check_ar(ar, long_run_slope)?;
        let block = *self
            .blocks
            .iter()
            .find(|b| b.kind == BlockKind::SemiLocalLinear)
            .ok_or_else(|| {
                StateSpaceError::InvalidParameter("model has no semi-local linear trend".into())
            })?;
        self.transition
            .view_mut((block.start, block.start), (3, 3))
            .copy_from(&semi_local_transition(ar, long_run_slope));
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if !self.offset.is_empty() && self.offset.len() < n {
            return Err(StateSpaceError::DimensionMismatch(format!(
                "{} offsets for {n} observations",
                self.offset.len()
            )));
        }
        Ok(())
    }
}

fn check_ar(ar: f64, long_run_slope: f64) -> Result<()> {
    if !(ar.is_finite() && ar.abs() < 1.0 && long_run_slope.is_finite()) {
        return Err(StateSpaceError::InvalidParameter(format!(
            "semi-local trend needs |ar| < 1 and finite long-run slope, got ar = {ar}, slope = {long_run_slope}"
        )));
    }
    Ok(())
}

/// `δ_{t+1} = D + ρ (δ_t − D)` written against a constant-one state.
fn semi_local_transition(ar: f64, long_run_slope: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0,
            1.0,
            0.0,
            0.0,
            ar,
            (1.0 - ar) * long_run_slope,
            0.0,
            0.0,
            1.0,
        ],
    )
}

/// Output of the forward pass.
#[derive(Debug, Clone)]
pub struct FilterResult {
    /// `a_t = E[α_t | y_1..y_{t-1}]`.
    pub predicted_mean: Vec<DVector<f64>>,
    pub predicted_cov: Vec<DMatrix<f64>>,
    /// `E[α_t | y_1..y_t]`.
    pub filtered_mean: Vec<DVector<f64>>,
    pub filtered_cov: Vec<DMatrix<f64>>,
    /// One-step-ahead prediction of `y_t`.
    pub forecast_mean: Vec<f64>,
    pub forecast_var: Vec<f64>,
    pub log_likelihood: f64,
    innovations: Innovations,
}

impl FilterResult {
    pub fn len(&self) -> usize {
        self.forecast_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forecast_mean.is_empty()
    }

    /// Whether day `t` contributed a measurement update.
    pub fn updated(&self, t: usize) -> bool {
        self.innovations.used[t]
    }
}

/// Quantities the backward passes need.
#[derive(Debug, Clone)]
struct Innovations {
    v: Vec<f64>,
    f: Vec<f64>,
    /// `K_t = T P_t Z' / F_t`.
    k: Vec<DVector<f64>>,
    used: Vec<bool>,
    first_cov: DMatrix<f64>,
    first_mean: DVector<f64>,
}

struct FilterOptions {
    store_moments: bool,
    use_offsets: bool,
    zero_init_mean: bool,
}

struct RawFilter {
    innovations: Innovations,
    predicted_mean: Vec<DVector<f64>>,
    predicted_cov: Vec<DMatrix<f64>>,
    filtered_mean: Vec<DVector<f64>>,
    filtered_cov: Vec<DMatrix<f64>>,
    forecast_mean: Vec<f64>,
    forecast_var: Vec<f64>,
    log_likelihood: f64,
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = avg;
            p[(j, i)] = avg;
        }
    }
}

fn run_filter(model: &StateSpaceModel, y: &[Option<f64>], opts: FilterOptions) -> Result<RawFilter> {
    let n = y.len();
    let m = model.dim();
    let t_mat = &model.transition;
    let z = &model.z;
    let h = model.obs_var;

    let mut a = if opts.zero_init_mean {
        DVector::zeros(m)
    } else {
        model.init_mean.clone()
    };
    let mut p = model.init_cov.clone();
    let first_mean = a.clone();
    let first_cov = p.clone();

    let mut out = RawFilter {
        innovations: Innovations {
            v: vec![0.0; n],
            f: vec![0.0; n],
            k: Vec::with_capacity(n),
            used: vec![false; n],
            first_cov,
            first_mean,
        },
        predicted_mean: Vec::new(),
        predicted_cov: Vec::new(),
        filtered_mean: Vec::new(),
        filtered_cov: Vec::new(),
        forecast_mean: Vec::new(),
        forecast_var: Vec::new(),
        log_likelihood: 0.0,
    };
    if opts.store_moments {
        out.predicted_mean.reserve(n);
        out.predicted_cov.reserve(n);
        out.filtered_mean.reserve(n);
        out.filtered_cov.reserve(n);
        out.forecast_mean.reserve(n);
        out.forecast_var.reserve(n);
    }
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let init_scale = (0..m)
        .map(|i| model.init_cov[(i, i)].abs())
        .fold(1.0, f64::max);
    let degenerate = DEGENERATE_ULPS * f64::EPSILON * init_scale;

    let mut pz = DVector::zeros(m);
    let mut tp = DMatrix::zeros(m, m);
    for (t, obs) in y.iter().enumerate() {
        p.mul_to(z, &mut pz);
        let f = z.dot(&pz) + h;
        let offset = if opts.use_offsets {
            model.offset_at(t)
        } else {
            0.0
        };
        let pred = z.dot(&a) + offset;
        if opts.store_moments {
            out.predicted_mean.push(a.clone());
            out.predicted_cov.push(p.clone());
            out.forecast_mean.push(pred);
            out.forecast_var.push(f);
        }
        if f < -degenerate {
            return Err(StateSpaceError::NumericalFailure { t, variance: f });
        }
        match obs {
            Some(obs) if f > degenerate => {
                let v = obs - pred;
                out.log_likelihood -= 0.5 * (ln_2pi + f.ln() + v * v / f);
                a.axpy(v / f, &pz, 1.0);
                p.ger(-1.0 / f, &pz, &pz, 1.0);
                out.innovations.v[t] = v;
                out.innovations.f[t] = f;
                out.innovations.used[t] = true;
                out.innovations.k.push(t_mat * &pz / f);
            }
            _ => {
                out.innovations.f[t] = f;
                out.innovations.k.push(DVector::zeros(m));
            }
        }
        symmetrize(&mut p);
        if opts.store_moments {
            out.filtered_mean.push(a.clone());
            out.filtered_cov.push(p.clone());
        }
        a = t_mat * &a;
        t_mat.mul_to(&p, &mut tp);
        tp.mul_to(&t_mat.transpose(), &mut p);
        for i in 0..m {
            p[(i, i)] += model.state_var[i];
        }
        symmetrize(&mut p);
    }
    Ok(out)
}

/// Forward Kalman recursion. Missing days get a prediction step only and
/// contribute nothing to the log-likelihood.
pub fn kalman_filter(model: &StateSpaceModel, y: &[Option<f64>]) -> Result<FilterResult> {
    if y.is_empty() {
        return Err(StateSpaceError::NoObservations);
    }
    model.check_len(y.len())?;
    let raw = run_filter(
        model,
        y,
        FilterOptions {
            store_moments: true,
            use_offsets: true,
            zero_init_mean: false,
        },
    )?;
    Ok(FilterResult {
        predicted_mean: raw.predicted_mean,
        predicted_cov: raw.predicted_cov,
        filtered_mean: raw.filtered_mean,
        filtered_cov: raw.filtered_cov,
        forecast_mean: raw.forecast_mean,
        forecast_var: raw.forecast_var,
        log_likelihood: raw.log_likelihood,
        innovations: raw.innovations,
    })
}

/// Smoothed state moments `E[α_t | y]` and `Var[α_t | y]`.
#[derive(Debug, Clone)]
pub struct SmootherResult {
    pub mean: Vec<DVector<f64>>,
    pub cov: Vec<DMatrix<f64>>,
}

/// Backward pass over a completed filter.
pub fn smooth(model: &StateSpaceModel, filter: &FilterResult) -> SmootherResult {
    let n = filter.len();
    let m = model.dim();
    let t_mat = &model.transition;
    let z = &model.z;
    let inn = &filter.innovations;

    let mut r = DVector::zeros(m);
    let mut nmat = DMatrix::zeros(m, m);
    let mut mean = vec![DVector::zeros(m); n];
    let mut cov = vec![DMatrix::zeros(m, m); n];
    for t in (0..n).rev() {
        if inn.used[t] {
            let l = t_mat - &inn.k[t] * z.transpose();
            r = z * (inn.v[t] / inn.f[t]) + l.transpose() * &r;
            nmat = z * z.transpose() / inn.f[t] + l.transpose() * &nmat * &l;
        } else {
            r = t_mat.transpose() * &r;
            nmat = t_mat.transpose() * &nmat * t_mat;
        }
        let p = &filter.predicted_cov[t];
        mean[t] = &filter.predicted_mean[t] + p * &r;
        let mut v = p - p * &nmat * p;
        symmetrize(&mut v);
        cov[t] = v;
    }
    SmootherResult { mean, cov }
}

pub fn kalman_smoother(model: &StateSpaceModel, y: &[Option<f64>]) -> Result<SmootherResult> {
    let filter = kalman_filter(model, y)?;
    Ok(smooth(model, &filter))
}

/// Smoothed means only, via the fast state smoother (no covariances).
fn fast_state_smoother(model: &StateSpaceModel, inn: &Innovations) -> Vec<DVector<f64>> {
    let n = inn.v.len();
    let m = model.dim();
    let t_mat = &model.transition;
    let z = &model.z;

    // r_before[t] is the backward cumulant just before day t.
    let mut r_before = vec![DVector::zeros(m); n];
    let mut r = DVector::zeros(m);
    for t in (0..n).rev() {
        if inn.used[t] {
            // L' r = T' r − Z (K' r)
            let kr = inn.k[t].dot(&r);
            r = t_mat.tr_mul(&r) + z * (inn.v[t] / inn.f[t] - kr);
        } else {
            r = t_mat.tr_mul(&r);
        }
        r_before[t] = r.clone();
    }
    let mut out = Vec::with_capacity(n);
    let mut alpha = &inn.first_mean + &inn.first_cov * &r_before[0];
    for t in 0..n {
        let next = if t + 1 < n {
            Some(t_mat * &alpha + model.state_var.component_mul(&r_before[t + 1]))
        } else {
            None
        };
        out.push(alpha);
        match next {
            Some(a) => alpha = a,
            None => break,
        }
    }
    out
}

/// Lower-triangular factor `L` with `L L' = P` for a positive semidefinite `P`.
pub fn psd_factor(p: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = p.clone().cholesky() {
        return chol.l();
    }
    let eig = p.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals)
}

fn standard_normal_vector<R: Rng + ?Sized>(rng: &mut R, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |_, _| rng.sample(StandardNormal))
}

/// Draws one state path from `p(α_1..α_n | y)`.
///
/// Simulates a fake state path and data set from the model, then corrects
/// the fake path by the smoothed mean of the difference between real and
/// fake observations (mean-correction construction).
pub fn simulation_smoother<R: Rng + ?Sized>(
    model: &StateSpaceModel,
    y: &[Option<f64>],
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let n = y.len();
    if n == 0 {
        return Err(StateSpaceError::NoObservations);
    }
    model.check_len(n)?;
    let m = model.dim();
    let state_sd = model.state_var.map(f64::sqrt);
    let obs_sd = model.obs_var.sqrt();

    let mut alpha = &model.init_mean + psd_factor(&model.init_cov) * standard_normal_vector(rng, m);
    let mut fake_states = Vec::with_capacity(n);
    let mut diff = Vec::with_capacity(n);
    for (t, obs) in y.iter().enumerate() {
        let eps: f64 = rng.sample(StandardNormal);
        let y_fake = model.z.dot(&alpha) + model.offset_at(t) + obs_sd * eps;
        diff.push(obs.map(|v| v - y_fake));
        let eta = standard_normal_vector(rng, m).component_mul(&state_sd);
        let next = &model.transition * &alpha + eta;
        fake_states.push(std::mem::replace(&mut alpha, next));
    }

    let raw = run_filter(
        model,
        &diff,
        FilterOptions {
            store_moments: false,
            use_offsets: false,
            zero_init_mean: true,
        },
    )?;
    let correction = fast_state_smoother(model, &raw.innovations);
    Ok(fake_states
        .into_iter()
        .zip(correction)
        .map(|(fake, c)| fake + c)
        .collect())
}

/// Predictive distribution of future observations.
#[derive(Debug, Clone)]
pub struct Forecast {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// Simulated observation paths, one per requested draw.
    pub paths: Vec<Vec<f64>>,
}

/// Projects the state forward `horizon` days from a filtered state
/// `N(state_mean, state_cov)` at the last observed day.
///
/// `offsets` holds the future regression contribution per day; an empty
/// slice means zero.
pub fn forecast<R: Rng + ?Sized>(
    model: &StateSpaceModel,
    state_mean: &DVector<f64>,
    state_cov: &DMatrix<f64>,
    horizon: usize,
    offsets: &[f64],
    n_paths: usize,
    rng: &mut R,
) -> Result<Forecast> {
    let m = model.dim();
    if horizon == 0 {
        return Err(StateSpaceError::InvalidParameter(
            "forecast horizon must be at least 1".into(),
        ));
    }
    if state_mean.len() != m || state_cov.shape() != (m, m) {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "terminal state has dimension {}, model has {m}",
            state_mean.len()
        )));
    }
    if !offsets.is_empty() && offsets.len() != horizon {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "{} future offsets for horizon {horizon}",
            offsets.len()
        )));
    }
    let offset = |h: usize| offsets.get(h).copied().unwrap_or(0.0);
    let t_mat = &model.transition;

    let mut mean = Vec::with_capacity(horizon);
    let mut variance = Vec::with_capacity(horizon);
    let mut a = state_mean.clone();
    let mut p = state_cov.clone();
    for h in 0..horizon {
        a = t_mat * &a;
        p = t_mat * &p * t_mat.transpose();
        for i in 0..m {
            p[(i, i)] += model.state_var[i];
        }
        symmetrize(&mut p);
        mean.push(model.z.dot(&a) + offset(h));
        variance.push(model.z.dot(&(&p * &model.z)) + model.obs_var);
    }

    let factor = psd_factor(state_cov);
    let state_sd = model.state_var.map(f64::sqrt);
    let obs_sd = model.obs_var.sqrt();
    let paths = (0..n_paths)
        .map(|_| {
            let mut alpha = state_mean + &factor * standard_normal_vector(rng, m);
            (0..horizon)
                .map(|h| {
                    alpha = t_mat * &alpha + standard_normal_vector(rng, m).component_mul(&state_sd);
                    let eps: f64 = rng.sample(StandardNormal);
                    model.z.dot(&alpha) + offset(h) + obs_sd * eps
                })
                .collect()
        })
        .collect();
    Ok(Forecast {
        mean,
        variance,
        paths,
    })
}
