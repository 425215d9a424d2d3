//! Test-only oracles, independent of the recursive implementations.

#![allow(dead_code)]

use impact_bsts::state_space::StateSpaceModel;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// The joint Gaussian implied by a state-space model over `n` days, built
/// densely from the system matrices.
pub struct DenseJoint {
    pub n: usize,
    pub m: usize,
    /// Stacked state means, length `n * m`.
    pub state_mean: DVector<f64>,
    /// Stacked state covariance, `n*m × n*m`.
    pub state_cov: DMatrix<f64>,
    /// Observation loading, `n × n*m`.
    pub loading: DMatrix<f64>,
    pub obs_mean: DVector<f64>,
    pub obs_cov: DMatrix<f64>,
}

impl DenseJoint {
    pub fn new(model: &StateSpaceModel, n: usize) -> Self {
        let m = model.dim();
        let t = model.transition();
        let q = DMatrix::from_diagonal(model.state_var());
        let mut means = vec![model.init_mean().clone()];
        let mut vars = vec![model.init_cov().clone()];
        for s in 1..n {
            means.push(t * &means[s - 1]);
            vars.push(t * &vars[s - 1] * t.transpose() + &q);
        }
        let mut state_mean = DVector::zeros(n * m);
        let mut state_cov = DMatrix::zeros(n * m, n * m);
        for s in 0..n {
            state_mean.rows_mut(s * m, m).copy_from(&means[s]);
            // Cov(α_u, α_s) = T^{u-s} Var(α_s) for u ≥ s.
            let mut block = vars[s].clone();
            for u in s..n {
                state_cov.view_mut((u * m, s * m), (m, m)).copy_from(&block);
                state_cov
                    .view_mut((s * m, u * m), (m, m))
                    .copy_from(&block.transpose());
                block = t * &block;
            }
        }
        let mut loading = DMatrix::zeros(n, n * m);
        for s in 0..n {
            for i in 0..m {
                loading[(s, s * m + i)] = model.z()[i];
            }
        }
        let offsets = DVector::from_fn(n, |s, _| model.offset_at(s));
        let obs_mean = &loading * &state_mean + offsets;
        let obs_cov = &loading * &state_cov * loading.transpose()
            + DMatrix::identity(n, n) * model.obs_var();
        Self {
            n,
            m,
            state_mean,
            state_cov,
            loading,
            obs_mean,
            obs_cov,
        }
    }

    fn present(y: &[Option<f64>]) -> Vec<usize> {
        (0..y.len()).filter(|&i| y[i].is_some()).collect()
    }

    /// Multivariate normal log-density of the present observations.
    pub fn log_likelihood(&self, y: &[Option<f64>]) -> f64 {
        let idx = Self::present(y);
        if idx.is_empty() {
            return 0.0;
        }
        let k = idx.len();
        let cov = DMatrix::from_fn(k, k, |i, j| self.obs_cov[(idx[i], idx[j])]);
        let resid = DVector::from_fn(k, |i, _| y[idx[i]].unwrap() - self.obs_mean[idx[i]]);
        let chol = cov.cholesky().expect("observation covariance is SPD");
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let quad = resid.dot(&chol.solve(&resid));
        -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
    }

    /// Conditional state means and covariances given the present observations.
    pub fn smoothed(&self, y: &[Option<f64>]) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
        let idx = Self::present(y);
        let (mean, cov) = if idx.is_empty() {
            (self.state_mean.clone(), self.state_cov.clone())
        } else {
            let k = idx.len();
            let sigma = DMatrix::from_fn(k, k, |i, j| self.obs_cov[(idx[i], idx[j])]);
            let resid = DVector::from_fn(k, |i, _| y[idx[i]].unwrap() - self.obs_mean[idx[i]]);
            let g = DMatrix::from_fn(k, self.n * self.m, |i, j| self.loading[(idx[i], j)]);
            let cross = &self.state_cov * g.transpose();
            let chol = sigma.cholesky().expect("SPD");
            let mean = &self.state_mean + &cross * chol.solve(&resid);
            let cov = &self.state_cov - &cross * chol.solve(&cross.transpose());
            (mean, cov)
        };
        let m = self.m;
        let means = (0..self.n)
            .map(|s| mean.rows(s * m, m).into_owned())
            .collect();
        let covs = (0..self.n)
            .map(|s| cov.view((s * m, s * m), (m, m)).into_owned())
            .collect();
        (means, covs)
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// A random model with `m` states: arbitrary loading, non-explosive transition,
/// some zero noise variances, positive observation noise and a proper prior.
pub fn random_model<R: Rng>(rng: &mut R, m: usize, n: usize) -> StateSpaceModel {
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let z = DVector::from_fn(m, |_, _| normal());
    // Frobenius norm ≤ 1 keeps the process non-explosive so the dense
    // covariance stays well conditioned over 20 days.
    let mut t = DMatrix::from_fn(m, m, |_, _| normal());
    let norm = t.norm();
    if norm > 1.0 {
        t /= norm;
    }
    let q = DVector::from_fn(m, |_, _| {
        let v: f64 = normal();
        if v < -0.5 {
            0.0
        } else {
            0.05 + v * v * 0.3
        }
    });
    let h = 0.1 + normal().powi(2);
    let a1 = DVector::from_fn(m, |_, _| normal());
    let root = DMatrix::from_fn(m, m, |_, _| normal());
    let p1 = &root * root.transpose() + DMatrix::identity(m, m) * 0.2;
    let offsets: Vec<f64> = (0..n).map(|_| normal() * 0.5).collect();
    StateSpaceModel::from_parts(z, t, q, h, a1, p1)
        .unwrap()
        .with_offsets(offsets)
}

pub fn random_observations<R: Rng>(rng: &mut R, n: usize, missing_rate: f64) -> Vec<Option<f64>> {
    (0..n)
        .map(|_| {
            let v: f64 = rng.sample(StandardNormal);
            (rng.random::<f64>() >= missing_rate).then_some(v * 2.0)
        })
        .collect()
}
