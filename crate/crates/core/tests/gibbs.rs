use chrono::NaiveDate;
use impact_bsts::gibbs::{
    fit, inclusion_probabilities, one_step_predictions, McmcConfig, ModelSpec, PosteriorSamples,
    TrendKind,
};
use impact_bsts::series::{standardize, DateIndexedSeries, SeriesPanel};
use impact_bsts::state_space::kalman_filter;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 3, 1).unwrap()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Local-level target driven by one control with a known standardized
/// coefficient.
fn one_control_panel(seed: u64, n: usize, beta: f64) -> SeriesPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let mut level = 0.0;
    let y: Vec<f64> = x
        .iter()
        .map(|xi| {
            level += 0.05 * normal(&mut rng);
            level + beta * xi + 0.3 * normal(&mut rng)
        })
        .collect();
    let treated = DateIndexedSeries::from_values("y", start(), y).unwrap();
    let control = DateIndexedSeries::from_values("x", start(), x).unwrap();
    SeriesPanel::new(treated, vec![control], vec![]).unwrap()
}

fn quick(seed: u64) -> McmcConfig {
    McmcConfig {
        iterations: 300,
        burn_in: 100,
        seed,
        chains: 1,
    }
}

/// Coefficient on the original scale of y per unit of x.
fn raw_coefficients(samples: &PosteriorSamples) -> Vec<f64> {
    let ratio = samples.treated_scale.sd / samples.regressor_scales[0].sd;
    samples
        .draws
        .iter()
        .map(|d| d.coefficients[0] * ratio)
        .collect()
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[test]
fn identical_seed_gives_identical_samples() {
    let panel = one_control_panel(1, 120, 0.8);
    let spec = ModelSpec::new(TrendKind::LocalLinear);
    let a = fit(&spec, &panel, &quick(9)).unwrap();
    let b = fit(&spec, &panel, &quick(9)).unwrap();
    assert_eq!(a, b);
    let c = fit(&spec, &panel, &quick(10)).unwrap();
    assert_ne!(a.draws, c.draws);
}

#[test]
fn draw_count_and_sparsity_contract() {
    let panel = one_control_panel(2, 150, 0.05);
    let config = McmcConfig {
        chains: 2,
        ..quick(3)
    };
    let samples = fit(&ModelSpec::default(), &panel, &config).unwrap();
    assert_eq!(samples.len(), 2 * 200);
    let pip = inclusion_probabilities(&samples);
    let zero_share = samples
        .draws
        .iter()
        .filter(|d| d.coefficients[0] == 0.0)
        .count() as f64
        / samples.len() as f64;
    assert_eq!(zero_share, 1.0 - pip[0]);
    for d in &samples.draws {
        assert_eq!(d.inclusion[0], d.coefficients[0] != 0.0);
        assert_eq!(d.trend.len(), 150);
        assert_eq!(d.seasonal.len(), 150);
    }
}

#[test]
fn coefficient_interval_covers_truth() {
    let reps = 100;
    let mut covered = 0;
    for seed in 0..reps {
        let panel = one_control_panel(100 + seed, 400, 0.8);
        let spec = ModelSpec::new(TrendKind::LocalLevel).with_seasonal(None);
        let config = McmcConfig {
            seed,
            ..McmcConfig::default()
        };
        let samples = fit(&spec, &panel, &config).unwrap();
        let mut beta = raw_coefficients(&samples);
        beta.sort_by(f64::total_cmp);
        if quantile(&beta, 0.025) <= 0.8 && 0.8 <= quantile(&beta, 0.975) {
            covered += 1;
        }
    }
    assert!(covered >= 90, "covered {covered} of {reps}");
}

#[test]
fn without_regressors_matches_filter_at_mean_variances() {
    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut level = 0.0;
    let y: Vec<f64> = (0..n)
        .map(|_| {
            level += 0.1 * normal(&mut rng);
            level + 0.5 * normal(&mut rng)
        })
        .collect();
    let treated = DateIndexedSeries::from_values("y", start(), y).unwrap();
    let panel = SeriesPanel::new(treated, vec![], vec![]).unwrap();
    let spec = ModelSpec::new(TrendKind::LocalLevel).with_seasonal(None);
    let samples = fit(&spec, &panel, &quick(4)).unwrap();

    let averaged = one_step_predictions(&samples, &panel, 4).unwrap();

    let k = samples.len() as f64;
    let mut model = samples.model_for_draw(0).unwrap();
    let level_var = samples.draws.iter().map(|d| d.level_var.unwrap()).sum::<f64>() / k;
    model.set_state_var(0, level_var);
    model.set_obs_var(samples.mean_obs_var());
    let (z, _) = standardize(&panel.treated).unwrap();
    let direct = kalman_filter(&model, z.values()).unwrap().forecast_mean;

    let mad = averaged
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n as f64;
    assert!(mad < 0.1, "mean absolute deviation {mad}");
}

#[test]
fn chains_agree_on_observation_variance() {
    let panel = one_control_panel(5, 300, 0.8);
    let spec = ModelSpec::new(TrendKind::LocalLevel).with_seasonal(None);
    let a = fit(&spec, &panel, &quick(11)).unwrap();
    let b = fit(&spec, &panel, &quick(12)).unwrap();
    let (va, vb) = (a.mean_obs_var(), b.mean_obs_var());
    assert!((va - vb).abs() / va.max(vb) < 0.1, "{va} vs {vb}");
}

#[test]
fn every_trend_kind_fits() {
    let panel = one_control_panel(6, 100, 0.5);
    for trend in TrendKind::ALL {
        let samples = fit(&ModelSpec::new(trend), &panel, &quick(1)).unwrap();
        assert!(samples.draws.iter().all(|d| d.obs_var.is_finite()));
        if trend == TrendKind::SemiLocalLinear {
            assert!(samples.draws.iter().all(|d| d.ar.unwrap().abs() < 1.0));
        }
    }
}

#[test]
fn burn_in_not_below_iterations_is_rejected() {
    let panel = one_control_panel(7, 50, 0.5);
    let config = McmcConfig {
        iterations: 10,
        burn_in: 10,
        ..McmcConfig::default()
    };
    assert!(fit(&ModelSpec::default(), &panel, &config).is_err());
}
