use chrono::{Duration, NaiveDate};
use impact_bsts::gibbs::{fit, Draw, McmcConfig, ModelSpec, PosteriorSamples, TrendKind};
use impact_bsts::impact::{
    compute_impact, effect_draws, predict_counterfactual, Band, CounterfactualDraws, ImpactError,
};
use impact_bsts::series::{standardize, DateIndexedSeries, SeriesPanel, StandardizeParams};
use impact_bsts::state_space::kalman_filter;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 1).unwrap()
}

fn flat_post(n_days: usize, horizon: usize) -> SeriesPanel {
    let treated =
        DateIndexedSeries::from_values("y", start() + Duration::days(n_days as i64), vec![0.0; horizon])
            .unwrap();
    SeriesPanel::new(treated, vec![], vec![]).unwrap()
}

#[test]
fn static_intercept_without_noise_is_constant() {
    let draw = Draw {
        chain: 0,
        level_var: None,
        slope_var: None,
        seasonal_var: None,
        obs_var: 0.0,
        ar: None,
        long_run_slope: None,
        inclusion: vec![],
        coefficients: vec![],
        final_state: vec![1.5],
        trend: vec![],
        seasonal: vec![],
    };
    let samples = PosteriorSamples {
        spec: ModelSpec::new(TrendKind::StaticIntercept).with_seasonal(None),
        treated_scale: StandardizeParams {
            mean: 100.0,
            sd: 10.0,
            degenerate: false,
        },
        regressor_scales: vec![],
        control_names: vec![],
        covariate_names: vec![],
        start: start(),
        n_days: 30,
        chains: 1,
        draws: vec![draw; 120],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let cf = predict_counterfactual(&samples, &flat_post(30, 10), 10, &mut rng).unwrap();
    assert_eq!(cf.n_draws(), 120);
    assert!(cf.paths.iter().flatten().all(|&v| v == 115.0));
}

fn local_level_fit() -> (SeriesPanel, SeriesPanel, PosteriorSamples) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut level = 0.0;
    let y: Vec<f64> = (0..200)
        .map(|_| {
            level += 0.2 * rng.sample::<f64, _>(StandardNormal);
            50.0 + level + 0.5 * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let treated = DateIndexedSeries::from_values("y", start(), y).unwrap();
    let pre = SeriesPanel::new(treated, vec![], vec![]).unwrap();
    let spec = ModelSpec::new(TrendKind::LocalLevel).with_seasonal(None);
    let config = McmcConfig {
        iterations: 2500,
        burn_in: 500,
        seed: 6,
        chains: 1,
    };
    let samples = fit(&spec, &pre, &config).unwrap();
    (pre, flat_post(200, 20), samples)
}

#[test]
fn local_level_predictive_variance_matches_closed_form() {
    let (pre, post, samples) = local_level_fit();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cf = predict_counterfactual(&samples, &post, 20, &mut rng).unwrap();
    let (z, _) = standardize(&pre.treated).unwrap();
    let sd = samples.treated_scale.sd;
    let k = samples.len() as f64;

    // Per draw: terminal mean and variance of the level, then the
    // law of total variance across draws.
    let mut terminal = Vec::new();
    for i in 0..samples.len() {
        let model = samples.model_for_draw(i).unwrap();
        let f = kalman_filter(&model, z.values()).unwrap();
        let last = f.filtered_mean.len() - 1;
        let d = &samples.draws[i];
        terminal.push((
            f.filtered_mean[last][0],
            f.filtered_cov[last][(0, 0)],
            d.level_var.unwrap(),
            d.obs_var,
        ));
    }
    let mean_m = terminal.iter().map(|t| t.0).sum::<f64>() / k;
    let between = terminal.iter().map(|t| (t.0 - mean_m).powi(2)).sum::<f64>() / k;
    for h in [1usize, 5, 10, 20] {
        let within = terminal
            .iter()
            .map(|&(_, p, q, r)| p + h as f64 * q + r)
            .sum::<f64>()
            / k;
        let expected = (within + between) * sd * sd;
        let values: Vec<f64> = cf.day(h - 1).collect();
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let fourth = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / k;
        let se = ((fourth - var * var) / k).sqrt();
        assert!(
            (var - expected).abs() < 4.0 * se,
            "h = {h}: empirical {var}, closed form {expected}, se {se}"
        );
    }
    let spread = |h: usize| {
        let v: Vec<f64> = cf.day(h).collect();
        let m = v.iter().sum::<f64>() / k;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / k
    };
    assert!(spread(19) > spread(0));
}

#[test]
fn repeated_seed_gives_identical_matrix() {
    let (_, post, samples) = local_level_fit();
    let a = predict_counterfactual(&samples, &post, 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let b = predict_counterfactual(&samples, &post, 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn selected_control_without_post_data_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..150).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = x.iter().map(|v| 10.0 + 2.0 * v).collect();
    let pre = SeriesPanel::new(
        DateIndexedSeries::from_values("y", start(), y).unwrap(),
        vec![DateIndexedSeries::from_values("x", start(), x).unwrap()],
        vec![],
    )
    .unwrap();
    let config = McmcConfig {
        iterations: 200,
        burn_in: 50,
        seed: 1,
        chains: 1,
    };
    let samples = fit(&ModelSpec::default(), &pre, &config).unwrap();
    let err = predict_counterfactual(&samples, &flat_post(150, 7), 7, &mut rng).unwrap_err();
    assert!(matches!(err, ImpactError::MissingPostCovariate(name) if name == "x"));
}

fn draws_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (1usize..8).prop_flat_map(|h| {
        (
            prop::collection::vec(1.0f64..100.0, h),
            prop::collection::vec(prop::collection::vec(1.0f64..100.0, h), 100..130),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cumulative_steps_equal_pointwise((actual, paths) in draws_strategy()) {
        let series = DateIndexedSeries::from_values("y", start(), actual).unwrap();
        let cf = CounterfactualDraws { start: start(), paths };
        let e = effect_draws(&series, &cf).unwrap();
        for (p, c) in e.pointwise.iter().zip(&e.cumulative) {
            prop_assert_eq!(c[0], p[0]);
            for d in 1..p.len() {
                prop_assert_eq!(c[d], c[d - 1] + p[d]);
            }
        }
    }

    #[test]
    fn wider_level_never_narrows_bands((actual, paths) in draws_strategy()) {
        let series = DateIndexedSeries::from_values("y", start(), actual).unwrap();
        let cf = CounterfactualDraws { start: start(), paths };
        let narrow = compute_impact(&series, &cf, 0.80).unwrap();
        let wide = compute_impact(&series, &cf, 0.95).unwrap();
        let contains = |w: &Band, n: &Band| w.lower <= n.lower && w.upper >= n.upper;
        for (w, n) in wide.days.iter().zip(&narrow.days) {
            prop_assert!(contains(&w.counterfactual, &n.counterfactual));
            prop_assert!(contains(&w.pointwise, &n.pointwise));
            prop_assert!(contains(&w.cumulative, &n.cumulative));
        }
        prop_assert!(contains(&wide.relative_effect, &narrow.relative_effect));
    }
}
