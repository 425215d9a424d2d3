//! Spike-and-slab regression with a conjugate Gaussian / inverse-gamma slab.
//!
//! ```text
//! γ_j            ~ Bernoulli(π_j)
//! β_γ | σ², γ    ~ N(0, σ² Ω_γ⁻¹)
//! 1/σ²           ~ Gamma(ν/2, ν s²/2)
//! Ω              = g · [κ XᵀX/n + (1−κ) diag(XᵀX/n)]
//! ```
//!
//! Inclusion indicators are updated one at a time with β and σ² integrated
//! out, so an excluded coefficient is exactly zero in every draw.

use std::collections::BTreeSet;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpikeSlabError {
    #[error("information matrix of the included columns is singular")]
    SingularInformation,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
}

pub type Result<T, E = SpikeSlabError> = std::result::Result<T, E>;

/// Largest expected model size the default prior allows.
pub const MAX_EXPECTED_MODEL_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSlabPrior {
    /// Prior inclusion probability per column.
    pub inclusion_prob: Vec<f64>,
    pub expected_model_size: f64,
    /// Weight of the full averaged information matrix in the slab; the
    /// remainder goes to its diagonal.
    pub information_weight: f64,
    /// Number of observations' worth of information in the slab.
    pub prior_observations: f64,
    pub residual_df: f64,
    pub residual_sd_guess: f64,
    pub forced_in: BTreeSet<usize>,
}

/// Default prior over `selectable` columns: expected model size is 10% of
/// the columns, at least 1 and at most 5, spread uniformly.
pub fn default_prior(selectable: usize) -> SpikeSlabPrior {
    let size = selectable.div_ceil(10).clamp(1, MAX_EXPECTED_MODEL_SIZE);
    let (size, prob) = if selectable == 0 {
        (0.0, 0.0)
    } else {
        (size as f64, (size as f64 / selectable as f64).min(1.0))
    };
    SpikeSlabPrior {
        inclusion_prob: vec![prob; selectable],
        expected_model_size: size,
        information_weight: 0.5,
        prior_observations: 1.0,
        residual_df: 3.0,
        residual_sd_guess: 0.3,
        forced_in: BTreeSet::new(),
    }
}

impl SpikeSlabPrior {
    pub fn len(&self) -> usize {
        self.inclusion_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inclusion_prob.is_empty()
    }

    /// Appends `count` columns that are always included.
    pub fn with_forced_columns(mut self, count: usize) -> Self {
        for _ in 0..count {
            self.forced_in.insert(self.inclusion_prob.len());
            self.inclusion_prob.push(1.0);
        }
        self
    }

    /// Sets a new expected model size over the selectable columns.
    pub fn with_expected_model_size(mut self, size: f64) -> Self {
        let selectable: Vec<usize> = (0..self.len())
            .filter(|j| !self.forced_in.contains(j))
            .collect();
        if !selectable.is_empty() {
            let prob = (size / selectable.len() as f64).clamp(0.0, 1.0);
            for j in selectable {
                self.inclusion_prob[j] = prob;
            }
        }
        self.expected_model_size = size;
        self
    }

    /// Removes column `j` from consideration entirely.
    pub fn exclude(&mut self, j: usize) {
        self.forced_in.remove(&j);
        self.inclusion_prob[j] = 0.0;
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .inclusion_prob
            .iter()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(SpikeSlabError::InvalidPrior(
                "inclusion probabilities must lie in [0, 1]".into(),
            ));
        }
        if let Some(j) = self
            .forced_in
            .iter()
            .find(|&&j| self.inclusion_prob.get(j) != Some(&1.0))
        {
            return Err(SpikeSlabError::InvalidPrior(format!(
                "forced column {j} must have inclusion probability 1"
            )));
        }
        if !(0.0..=1.0).contains(&self.information_weight)
            || self.prior_observations <= 0.0
            || self.residual_df <= 0.0
            || self.residual_sd_guess <= 0.0
        {
            return Err(SpikeSlabError::InvalidPrior(
                "slab weights, residual df and residual sd guess must be positive".into(),
            ));
        }
        Ok(())
    }

    fn residual_ss(&self) -> f64 {
        self.residual_df * self.residual_sd_guess * self.residual_sd_guess
    }
}

/// Current value of the regression block of a sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionState {
    pub inclusion: Vec<bool>,
    /// Exactly zero wherever `inclusion` is false.
    pub coefficients: Vec<f64>,
    pub residual_var: f64,
}

impl RegressionState {
    /// Forced columns included, everything else out, coefficients zero.
    pub fn initial(prior: &SpikeSlabPrior, residual_var: f64) -> Self {
        let inclusion = (0..prior.len())
            .map(|j| prior.inclusion_prob[j] >= 1.0)
            .collect();
        Self {
            inclusion,
            coefficients: vec![0.0; prior.len()],
            residual_var,
        }
    }
}

/// Sufficient statistics of a fixed design against changing targets.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    columns: Vec<Vec<f64>>,
    xtx: DMatrix<f64>,
    slab_precision: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    n: usize,
}

impl RegressionProblem {
    /// `columns` are the design columns, all of the same length.
    pub fn new(columns: Vec<Vec<f64>>, prior: &SpikeSlabPrior) -> Result<Self> {
        let p = columns.len();
        if p != prior.len() {
            return Err(SpikeSlabError::DimensionMismatch(format!(
                "{p} design columns but a prior over {} columns",
                prior.len()
            )));
        }
        prior.validate()?;
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(SpikeSlabError::DimensionMismatch(
                "design columns differ in length".into(),
            ));
        }
        let mut xtx = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
                xtx[(i, j)] = v;
                xtx[(j, i)] = v;
            }
        }
        let scale = prior.prior_observations / n.max(1) as f64;
        let kappa = prior.information_weight;
        let mut slab_precision = &xtx * (kappa * scale);
        for j in 0..p {
            slab_precision[(j, j)] += (1.0 - kappa) * scale * xtx[(j, j)];
        }
        Ok(Self {
            columns,
            xtx,
            slab_precision,
            xty: DVector::zeros(p),
            yty: 0.0,
            n,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn set_targets(&mut self, targets: &[f64]) -> Result<()> {
        if targets.len() != self.n && !self.columns.is_empty() {
            return Err(SpikeSlabError::DimensionMismatch(format!(
                "{} targets for {} design rows",
                targets.len(),
                self.n
            )));
        }
        if self.columns.is_empty() {
            self.n = targets.len();
        }
        for (j, col) in self.columns.iter().enumerate() {
            self.xty[j] = col.iter().zip(targets).map(|(x, y)| x * y).sum();
        }
        self.yty = targets.iter().map(|y| y * y).sum();
        Ok(())
    }

    /// Posterior precision, its Cholesky factor and the projected targets
    /// for the included columns.
    fn posterior(&self, included: &[usize]) -> Result<Option<Posterior>> {
        if included.is_empty() {
            return Ok(None);
        }
        let k = included.len();
        let omega = DMatrix::from_fn(k, k, |a, b| self.slab_precision[(included[a], included[b])]);
        let precision =
            DMatrix::from_fn(k, k, |a, b| self.xtx[(included[a], included[b])]) + &omega;
        let xty = DVector::from_fn(k, |a, _| self.xty[included[a]]);
        let omega_chol = omega.cholesky().ok_or(SpikeSlabError::SingularInformation)?;
        let chol = precision
            .cholesky()
            .ok_or(SpikeSlabError::SingularInformation)?;
        let mean = chol.solve(&xty);
        Ok(Some(Posterior {
            log_det_prior: log_det(&omega_chol),
            log_det_posterior: log_det(&chol),
            explained: xty.dot(&mean),
            mean,
            chol,
        }))
    }

    /// Residual sum of squares after the conjugate update, floored at 0.
    fn residual_ss(&self, post: Option<&Posterior>) -> f64 {
        (self.yty - post.map_or(0.0, |p| p.explained)).max(0.0)
    }

    fn log_marginal(&self, prior: &SpikeSlabPrior, included: &[usize]) -> Result<f64> {
        let post = self.posterior(included)?;
        let ss = self.residual_ss(post.as_ref());
        let dets = post
            .as_ref()
            .map_or(0.0, |p| 0.5 * (p.log_det_prior - p.log_det_posterior));
        let shape = 0.5 * (prior.residual_df + self.n as f64);
        Ok(dets - shape * (prior.residual_ss() + ss).ln())
    }
}

struct Posterior {
    log_det_prior: f64,
    log_det_posterior: f64,
    explained: f64,
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

fn included_indices(inclusion: &[bool]) -> Vec<usize> {
    (0..inclusion.len()).filter(|&j| inclusion[j]).collect()
}

fn log_prior(prior: &SpikeSlabPrior, inclusion: &[bool]) -> f64 {
    inclusion
        .iter()
        .zip(&prior.inclusion_prob)
        .filter(|(_, &p)| p > 0.0 && p < 1.0)
        .map(|(&on, &p)| if on { p.ln() } else { (1.0 - p).ln() })
        .sum()
}

/// One Gibbs sweep over the selectable columns in random order. Columns
/// with π = 0 are always out and columns with π = 1 always in.
pub fn sample_inclusion<R: Rng + ?Sized>(
    current: &[bool],
    prior: &SpikeSlabPrior,
    problem: &RegressionProblem,
    rng: &mut R,
) -> Result<Vec<bool>> {
    if current.len() != problem.n_columns() {
        return Err(SpikeSlabError::DimensionMismatch(format!(
            "inclusion vector of length {} for {} columns",
            current.len(),
            problem.n_columns()
        )));
    }
    let mut gamma: Vec<bool> = current
        .iter()
        .zip(&prior.inclusion_prob)
        .map(|(&g, &p)| if p <= 0.0 { false } else if p >= 1.0 { true } else { g })
        .collect();
    let mut order: Vec<usize> = (0..gamma.len())
        .filter(|&j| prior.inclusion_prob[j] > 0.0 && prior.inclusion_prob[j] < 1.0)
        .collect();
    order.shuffle(rng);

    let mut current_lp =
        problem.log_marginal(prior, &included_indices(&gamma))? + log_prior(prior, &gamma);
    for j in order {
        gamma[j] = !gamma[j];
        let flipped_lp =
            problem.log_marginal(prior, &included_indices(&gamma))? + log_prior(prior, &gamma);
        // P(keep flip) = 1 / (1 + exp(current − flipped)).
        let accept = 1.0 / (1.0 + (current_lp - flipped_lp).exp());
        if rng.random::<f64>() < accept {
            current_lp = flipped_lp;
        } else {
            gamma[j] = !gamma[j];
        }
    }
    Ok(gamma)
}

/// Draws `(β, σ²)` given the inclusion vector: σ² from its inverse-gamma
/// conditional, then β over the included columns from its Gaussian
/// conditional. Excluded coefficients are exactly zero.
pub fn sample_coefficients<R: Rng + ?Sized>(
    inclusion: &[bool],
    prior: &SpikeSlabPrior,
    problem: &RegressionProblem,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    if inclusion.len() != problem.n_columns() {
        return Err(SpikeSlabError::DimensionMismatch(format!(
            "inclusion vector of length {} for {} columns",
            inclusion.len(),
            problem.n_columns()
        )));
    }
    let included = included_indices(inclusion);
    let post = problem.posterior(&included)?;
    let shape = 0.5 * (prior.residual_df + problem.n_rows() as f64);
    let rate = 0.5 * (prior.residual_ss() + problem.residual_ss(post.as_ref()));
    let precision = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| SpikeSlabError::InvalidPrior(e.to_string()))?
        .sample(rng);
    let residual_var = 1.0 / precision;

    let mut beta = vec![0.0; inclusion.len()];
    if let Some(post) = post {
        let k = included.len();
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        // Solve L' x = z so that x ~ N(0, (L L')⁻¹).
        let noise = post
            .chol
            .l_dirty()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or(SpikeSlabError::SingularInformation)?;
        let sd = residual_var.sqrt();
        for (a, &j) in included.iter().enumerate() {
            beta[j] = post.mean[a] + sd * noise[a];
        }
    }
    Ok((beta, residual_var))
}

/// Inclusion sweep followed by a coefficient draw.
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &RegressionState,
    prior: &SpikeSlabPrior,
    problem: &RegressionProblem,
    rng: &mut R,
) -> Result<RegressionState> {
    let inclusion = sample_inclusion(&state.inclusion, prior, problem, rng)?;
    let (coefficients, residual_var) = sample_coefficients(&inclusion, prior, problem, rng)?;
    Ok(RegressionState {
        inclusion,
        coefficients,
        residual_var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::mean_sd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn standardized(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v = normals(rng, n);
        let (m, s) = mean_sd(&v);
        v.iter().map(|x| (x - m) / s).collect()
    }

    fn run_chain(
        prior: &SpikeSlabPrior,
        problem: &RegressionProblem,
        seed: u64,
        burn: usize,
        keep: usize,
    ) -> Vec<RegressionState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = RegressionState::initial(prior, 1.0);
        let mut out = Vec::with_capacity(keep);
        for i in 0..burn + keep {
            state = gibbs_step(&state, prior, problem, &mut rng).unwrap();
            if i >= burn {
                out.push(state.clone());
            }
        }
        out
    }

    fn frequencies(draws: &[RegressionState]) -> Vec<f64> {
        let p = draws[0].inclusion.len();
        (0..p)
            .map(|j| draws.iter().filter(|d| d.inclusion[j]).count() as f64 / draws.len() as f64)
            .collect()
    }

    #[test]
    fn default_prior_examples() {
        let p = default_prior(20);
        assert_eq!(p.expected_model_size, 2.0);
        assert!(p.inclusion_prob.iter().all(|&x| (x - 0.1).abs() < 1e-15));

        let p = default_prior(100);
        assert_eq!(p.expected_model_size, 5.0);
        assert!(p.inclusion_prob.iter().all(|&x| (x - 0.05).abs() < 1e-15));

        let p = default_prior(1);
        assert_eq!(p.expected_model_size, 1.0);
        assert_eq!(p.inclusion_prob, vec![1.0]);

        assert_eq!(default_prior(30).expected_model_size, 3.0);
        assert_eq!(default_prior(0).len(), 0);
        assert_eq!(p.residual_df, 3.0);
        assert_eq!(p.residual_sd_guess, 0.3);
        assert_eq!(p.information_weight, 0.5);
    }

    #[test]
    fn forced_columns_have_probability_one() {
        let p = default_prior(4).with_forced_columns(2);
        assert_eq!(p.len(), 6);
        assert_eq!(p.forced_in.iter().copied().collect::<Vec<_>>(), vec![4, 5]);
        assert!(p.validate().is_ok());
        let p = p.with_expected_model_size(2.0);
        assert_eq!(p.inclusion_prob, vec![0.5, 0.5, 0.5, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn zero_prior_probability_is_never_included() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = standardized(&mut rng, 200);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let mut prior = default_prior(1);
        prior.exclude(0);
        let mut problem = RegressionProblem::new(vec![x], &prior).unwrap();
        problem.set_targets(&y).unwrap();
        let draws = run_chain(&prior, &problem, 2, 0, 50);
        assert!(draws.iter().all(|d| !d.inclusion[0] && d.coefficients[0] == 0.0));
    }

    #[test]
    fn strong_signal_is_selected_among_decoys() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400;
        let columns: Vec<Vec<f64>> = (0..11).map(|_| standardized(&mut rng, n)).collect();
        let y: Vec<f64> = (0..n)
            .map(|t| 2.0 * columns[0][t] + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let prior = default_prior(11);
        let mut problem = RegressionProblem::new(columns, &prior).unwrap();
        problem.set_targets(&y).unwrap();
        let freq = frequencies(&run_chain(&prior, &problem, 12, 100, 1000));
        assert!(freq[0] >= 0.95, "{freq:?}");
    }

    #[test]
    fn pure_noise_stays_near_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 400;
        let columns: Vec<Vec<f64>> = (0..10).map(|_| standardized(&mut rng, n)).collect();
        let y = normals(&mut rng, n);
        let prior = default_prior(10);
        let mut problem = RegressionProblem::new(columns, &prior).unwrap();
        problem.set_targets(&y).unwrap();
        let freq = frequencies(&run_chain(&prior, &problem, 22, 100, 1000));
        let avg = freq.iter().sum::<f64>() / freq.len() as f64;
        assert!(avg <= 2.0 * prior.inclusion_prob[0], "{avg}");
    }

    #[test]
    fn empty_model_has_zero_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = standardized(&mut rng, 50);
        let y = normals(&mut rng, 50);
        let prior = default_prior(1);
        let mut problem = RegressionProblem::new(vec![x], &prior).unwrap();
        problem.set_targets(&y).unwrap();
        let draws = 4000;
        let mut mean_precision = 0.0;
        for _ in 0..draws {
            let (beta, var) = sample_coefficients(&[false], &prior, &problem, &mut rng).unwrap();
            assert_eq!(beta, vec![0.0]);
            mean_precision += 1.0 / var / draws as f64;
        }
        // E[1/σ²] = shape / rate with the residual sum of squares = yᵀy.
        let yty: f64 = y.iter().map(|v| v * v).sum();
        let expect = (3.0 + 50.0) / (3.0 * 0.09 + yty);
        assert!((mean_precision - expect).abs() < 0.05 * expect);
    }

    #[test]
    fn orthonormal_design_posterior_mean_matches_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let raw = DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = raw.qr().q();
        let columns: Vec<Vec<f64>> = (0..3).map(|j| q.column(j).iter().copied().collect()).collect();
        let beta = [1.0, -2.0, 0.5];
        let y: Vec<f64> = (0..n)
            .map(|t| {
                (0..3).map(|j| beta[j] * columns[j][t]).sum::<f64>()
                    + 0.01 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        // Least squares on an orthonormal design is Xᵀy.
        let ols: Vec<f64> = columns
            .iter()
            .map(|c| c.iter().zip(&y).map(|(a, b)| a * b).sum())
            .collect();
        let prior = default_prior(3);
        let mut problem = RegressionProblem::new(columns, &prior).unwrap();
        problem.set_targets(&y).unwrap();
        let draws = 2000;
        let mut mean = [0.0; 3];
        for _ in 0..draws {
            let (b, _) = sample_coefficients(&[true; 3], &prior, &problem, &mut rng).unwrap();
            for j in 0..3 {
                mean[j] += b[j] / draws as f64;
            }
        }
        for j in 0..3 {
            assert!((mean[j] - ols[j]).abs() < 0.01, "{mean:?} vs {ols:?}");
        }
    }

    #[test]
    fn draws_are_seed_deterministic_and_sparse() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 120;
        let columns: Vec<Vec<f64>> = (0..6).map(|_| standardized(&mut rng, n)).collect();
        let y: Vec<f64> = (0..n)
            .map(|t| columns[1][t] - 0.5 * columns[4][t] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let prior = default_prior(6);
        let mut problem = RegressionProblem::new(columns, &prior).unwrap();
        problem.set_targets(&y).unwrap();
        let a = run_chain(&prior, &problem, 99, 0, 200);
        let b = run_chain(&prior, &problem, 99, 0, 200);
        assert_eq!(a, b);
        for d in &a {
            for j in 0..6 {
                if !d.inclusion[j] {
                    assert_eq!(d.coefficients[j], 0.0);
                }
            }
        }
    }

    #[test]
    fn column_scaling_leaves_selection_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 300;
        let columns: Vec<Vec<f64>> = (0..5).map(|_| standardized(&mut rng, n)).collect();
        let y: Vec<f64> = (0..n)
            .map(|t| 0.3 * columns[2][t] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let prior = default_prior(5);
        let c = 7.5;
        let mut scaled = columns.clone();
        scaled[2].iter_mut().for_each(|v| *v *= c);

        let mut base = RegressionProblem::new(columns, &prior).unwrap();
        base.set_targets(&y).unwrap();
        let mut other = RegressionProblem::new(scaled, &prior).unwrap();
        other.set_targets(&y).unwrap();
        let a = run_chain(&prior, &base, 4, 50, 1500);
        let b = run_chain(&prior, &other, 4, 50, 1500);
        let (fa, fb) = (frequencies(&a), frequencies(&b));
        for j in 0..5 {
            assert!((fa[j] - fb[j]).abs() < 0.05, "{fa:?} vs {fb:?}");
        }
        let mean = |d: &[RegressionState]| d.iter().map(|s| s.coefficients[2]).sum::<f64>() / d.len() as f64;
        let ratio = mean(&b) * c / mean(&a);
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn forced_degenerate_column_is_singular() {
        let prior = default_prior(0).with_forced_columns(1);
        let mut problem = RegressionProblem::new(vec![vec![0.0; 10]], &prior).unwrap();
        problem.set_targets(&[1.0; 10]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_coefficients(&[true], &prior, &problem, &mut rng),
            Err(SpikeSlabError::SingularInformation)
        );
    }

    #[test]
    fn forced_column_always_included() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let columns: Vec<Vec<f64>> = (0..3).map(|_| standardized(&mut rng, 80)).collect();
        let y = normals(&mut rng, 80);
        let prior = default_prior(2).with_forced_columns(1);
        let mut problem = RegressionProblem::new(columns, &prior).unwrap();
        problem.set_targets(&y).unwrap();
        let draws = run_chain(&prior, &problem, 7, 0, 100);
        assert!(draws.iter().all(|d| d.inclusion[2]));
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let prior = default_prior(2);
        assert!(RegressionProblem::new(vec![vec![1.0; 3]], &prior).is_err());
        let mut problem = RegressionProblem::new(vec![vec![1.0; 3], vec![2.0; 3]], &prior).unwrap();
        assert!(problem.set_targets(&[1.0; 4]).is_err());
    }
}
