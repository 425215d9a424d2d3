use std::fs;
use std::path::PathBuf;

use chrono::NaiveDate;
use impact_bsts::gibbs::{fit, inclusion_probabilities, standardized_coefficients, McmcConfig, ModelSpec, PosteriorSamples};
use impact_bsts::impact::{compute_impact, predict_counterfactual, significance, ImpactReport};
use impact_bsts::prescreen::{rank_controls, ScreeningOptions, ScreeningReport};
use impact_bsts::series::{align, write_csv, SeriesPanel};
use impact_bsts::synth::{generate, inject};
use impact_bsts::validate::{cross_validate, derived_seed, grid_search};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{LoadedConfig, SeriesSource, SimulateSettings};
use crate::data::{load_inputs, load_source, periods, Fetcher, Periods};
use crate::error::CliError;
use crate::plot;

/// Stream index of the counterfactual simulation, kept apart from the
/// fold and grid-cell seeds.
const FORECAST_STREAM: usize = 1 << 20;

pub struct Context {
    pub loaded: LoadedConfig,
    pub out_dir: PathBuf,
    pub pointwise_panel: bool,
}

impl Context {
    fn write(&self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::io(format!("cannot create {}", self.out_dir.display()), e))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_csv_with(&self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::io(format!("cannot format {name}"), e))?;
        self.write(name, &buf)
    }

    fn config(&self) -> &crate::config::AnalysisConfig {
        &self.loaded.config
    }

    fn spec(&self) -> ModelSpec {
        self.loaded.model_spec()
    }

    fn mcmc(&self) -> McmcConfig {
        self.config().mcmc
    }

    fn load_periods(&self, with_post: bool) -> Result<Periods, CliError> {
        let mut fetcher = Fetcher::new(&self.loaded);
        let inputs = load_inputs(&self.loaded, &mut fetcher)?;
        periods(&self.loaded, &inputs, with_post)
    }

    fn screen(&self, pre: &SeriesPanel) -> ScreeningReport {
        let p = &self.config().prescreen;
        rank_controls(
            &pre.treated,
            &pre.controls,
            &ScreeningOptions {
                max_k: p.max_k,
                dtw_window: p.dtw_window,
            },
        )
    }

    /// Pre-period panel restricted to the prescreened controls.
    fn screened(&self, pre: &SeriesPanel) -> (SeriesPanel, Option<ScreeningReport>) {
        if !self.config().prescreen.enabled || pre.controls.is_empty() {
            return (pre.clone(), None);
        }
        let report = self.screen(pre);
        (pre.with_controls(&report.selected), Some(report))
    }
}

#[derive(Serialize)]
struct Window {
    start: NaiveDate,
    end: NaiveDate,
    days: usize,
}

impl Window {
    fn of(panel: &SeriesPanel) -> Self {
        Self {
            start: panel.start(),
            end: panel.end(),
            days: panel.len(),
        }
    }
}

#[derive(Serialize)]
struct ControlSummary {
    name: String,
    inclusion_probability: f64,
    standardized_coefficient: f64,
}

fn control_summaries(samples: &PosteriorSamples) -> Vec<ControlSummary> {
    samples
        .control_names
        .iter()
        .zip(inclusion_probabilities(samples))
        .zip(standardized_coefficients(samples))
        .map(|((name, p), b)| ControlSummary {
            name: name.clone(),
            inclusion_probability: p,
            standardized_coefficient: b,
        })
        .collect()
}

#[derive(Serialize)]
struct FitSummary {
    model: ModelSpec,
    mcmc: McmcConfig,
    pre_period: Window,
    draws: usize,
    controls: Vec<ControlSummary>,
    covariates: Vec<String>,
    /// Posterior mean residual sd on the original scale.
    residual_sd: f64,
    screening: Option<ScreeningReport>,
}

#[derive(Serialize)]
struct ImpactOutput<'a> {
    intervention_date: NaiveDate,
    pre_period: Window,
    post_period: Window,
    summary: String,
    controls: Vec<ControlSummary>,
    #[serde(flatten)]
    report: &'a ImpactReport,
}

pub fn prescreen(ctx: &Context) -> Result<(), CliError> {
    let periods = ctx.load_periods(false)?;
    let report = ctx.screen(&periods.pre);
    if report.candidates.is_empty() {
        eprintln!("warning: no candidate control series; selection is empty");
    }
    ctx.write_json("screening.json", &report)?;
    ctx.write_csv_with("screening.csv", |w| report.write_csv(w))?;
    println!("selected {} of {} candidate controls", report.selected.len(), report.candidates.len());
    Ok(())
}

pub fn fit_cmd(ctx: &Context) -> Result<(), CliError> {
    let periods = ctx.load_periods(false)?;
    let (pre, screening) = ctx.screened(&periods.pre);
    let samples = fit(&ctx.spec(), &pre, &ctx.mcmc())?;
    let summary = FitSummary {
        model: samples.spec.clone(),
        mcmc: ctx.mcmc(),
        pre_period: Window::of(&pre),
        draws: samples.len(),
        controls: control_summaries(&samples),
        covariates: samples.covariate_names.clone(),
        residual_sd: samples.mean_obs_var().sqrt() * samples.treated_scale.scale(),
        screening,
    };
    ctx.write_json("fit.json", &summary)?;
    println!("{} posterior draws over {} pre-period days", samples.len(), pre.len());
    Ok(())
}

pub fn impact(ctx: &Context) -> Result<(), CliError> {
    let periods = ctx.load_periods(true)?;
    let (pre, _) = ctx.screened(&periods.pre);
    let selected: Vec<String> = pre.controls.iter().map(|c| c.name().to_string()).collect();
    let post = periods.post.expect("post period requested").with_controls(&selected);
    let mcmc = ctx.mcmc();
    let samples = fit(&ctx.spec(), &pre, &mcmc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(mcmc.seed, FORECAST_STREAM));
    let draws = predict_counterfactual(&samples, &post, post.len(), &mut rng)?;
    let report = compute_impact(&post.treated, &draws, ctx.config().credible_level)?;
    let (_, summary) = significance(&report);
    let output = ImpactOutput {
        intervention_date: periods.intervention,
        pre_period: Window::of(&pre),
        post_period: Window::of(&post),
        summary: summary.clone(),
        controls: control_summaries(&samples),
        report: &report,
    };
    ctx.write_json("impact.json", &output)?;
    ctx.write_csv_with("impact.csv", |w| report.write_csv(w))?;
    ctx.write("impact.svg", plot::render(&pre.treated, &report, ctx.pointwise_panel).as_bytes())?;
    println!("{summary}");
    Ok(())
}

pub fn validate(ctx: &Context) -> Result<(), CliError> {
    let periods = ctx.load_periods(false)?;
    let (pre, _) = ctx.screened(&periods.pre);
    let report = cross_validate(&ctx.spec(), &pre, &ctx.config().validation, &ctx.mcmc())?;
    ctx.write_json("validation.json", &report)?;
    ctx.write_csv_with("validation.csv", |w| report.write_csv(w))?;
    println!("average holdout MAPE {:.3}% over {} folds", report.average_mape, report.folds.len());
    Ok(())
}

pub fn grid(ctx: &Context) -> Result<(), CliError> {
    let periods = ctx.load_periods(false)?;
    let (pre, _) = ctx.screened(&periods.pre);
    let report = grid_search(&ctx.config().grid, &ctx.spec(), &pre, &ctx.config().validation, &ctx.mcmc())?;
    for cell in &report.flagged {
        eprintln!(
            "warning: {} days / {} not evaluated: {}",
            cell.length,
            cell.trend.name(),
            cell.error.as_deref().unwrap_or("unknown error")
        );
    }
    ctx.write_json("grid.json", &report)?;
    ctx.write_csv_with("grid.csv", |w| report.write_csv(w))?;
    if let Some(best) = report.ranked.first() {
        println!(
            "best: {} days, {} (average MAPE {:.3}%)",
            best.length,
            best.trend.name(),
            best.average_mape.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let settings = ctx.config().simulate.clone().unwrap_or_else(|| SimulateSettings {
        synth: Default::default(),
        intervention: None,
        file: "synthetic.csv".into(),
    });
    let (mut panel, truth) = generate(&settings.synth)?;
    if let Some(intervention) = &settings.intervention {
        panel.treated = inject(&panel.treated, intervention)?;
    }
    ctx.write_csv_with(&settings.file, |w| panel.write_csv(w))?;
    ctx.write_json("truth.json", &truth)?;
    println!("{} days, {} controls", panel.len(), panel.controls.len());
    Ok(())
}

pub fn fetch(ctx: &Context) -> Result<(), CliError> {
    let c = ctx.config();
    let sources: Vec<&SeriesSource> = c
        .treated
        .iter()
        .chain(&c.controls)
        .chain(&c.covariates)
        .filter(|s| matches!(s, SeriesSource::Pageviews { .. }))
        .collect();
    if sources.is_empty() {
        return Err(CliError::Config("config has no `pageviews` sources to fetch".into()));
    }
    let mut fetcher = Fetcher::new(&ctx.loaded);
    let mut series = Vec::new();
    for source in sources {
        series.extend(load_source(&ctx.loaded, source, &mut fetcher)?);
    }
    let stats = fetcher.stats();
    if let Some(dir) = fetcher.cache_dir() {
        eprintln!(
            "{} network request(s), {} cache hit(s) (cache {})",
            stats.network_requests,
            stats.cache_hits,
            dir.display()
        );
    }
    let aligned = align(&series)?;
    let refs: Vec<_> = aligned.iter().collect();
    ctx.write_csv_with("pageviews.csv", |w| write_csv(w, &refs))?;
    Ok(())
}
