//! Resolves configured sources into aligned pre- and post-period panels.

use std::path::Path;
use std::time::Duration as StdDuration;

use chrono::{Duration, NaiveDate};
use impact_bsts::series::{align, interpolate_to_daily, seasonal_regressors, DateIndexedSeries, SeriesPanel};
use impact_bsts_ingest::{load_csv, Cache, Client, ClientOptions, FetchStats};

use crate::config::{LoadedConfig, SeriesSource};
use crate::error::CliError;

/// Lazily built pageview client shared by every source of one run.
pub struct Fetcher {
    options: ClientOptions,
    client: Option<Client>,
}

impl Fetcher {
    pub fn new(loaded: &LoadedConfig) -> Self {
        let api = &loaded.config.api;
        let mut options = ClientOptions {
            cache: Some(Cache::from_env()),
            ..ClientOptions::default()
        };
        if let Some(url) = &api.base_url {
            options.base_url = url.clone();
        }
        if let Some(ua) = &api.user_agent {
            options.user_agent = ua.clone();
        }
        if let Some(ms) = api.min_delay_ms {
            options.min_delay = StdDuration::from_millis(ms);
        }
        Self { options, client: None }
    }

    fn client(&mut self) -> Result<&Client, CliError> {
        if self.client.is_none() {
            self.client = Some(Client::new(self.options.clone())?);
        }
        Ok(self.client.as_ref().expect("client built above"))
    }

    pub fn stats(&self) -> FetchStats {
        self.client.as_ref().map(Client::stats).unwrap_or_default()
    }

    pub fn cache_dir(&self) -> Option<&Path> {
        self.options.cache.as_ref().map(Cache::dir)
    }
}

/// Loads the daily series of one source. Interpolated sources need a
/// calendar and are handled by [`build_panel`].
pub fn load_source(
    loaded: &LoadedConfig,
    source: &SeriesSource,
    fetcher: &mut Fetcher,
) -> Result<Vec<DateIndexedSeries>, CliError> {
    match source {
        SeriesSource::Csv {
            path,
            columns,
            date_column,
        } => {
            let full = loaded.resolve(path);
            if !full.exists() {
                return Err(CliError::Config(format!(
                    "source `{}` not found (looked in {})",
                    path.display(),
                    full.display()
                )));
            }
            let all = load_csv(&full, date_column)?;
            match columns {
                None => Ok(all),
                Some(names) => names
                    .iter()
                    .map(|n| {
                        all.iter().find(|s| s.name() == n).cloned().ok_or_else(|| {
                            CliError::Config(format!("source `{}` has no column `{n}`", path.display()))
                        })
                    })
                    .collect(),
            }
        }
        SeriesSource::Pageviews { .. } => {
            let (query, name) = source.pageview_query().expect("pageviews source");
            let series = fetcher.client()?.fetch_aggregate(&query)?;
            Ok(vec![match name {
                Some(n) => series.with_name(n),
                None => series,
            }])
        }
        SeriesSource::Interpolated { .. } => Ok(Vec::new()),
    }
}

/// Every series of the configuration on their common calendar, with
/// interpolated, month-of-year and holiday covariates appended.
pub struct Inputs {
    pub treated: DateIndexedSeries,
    pub controls: Vec<DateIndexedSeries>,
    pub covariates: Vec<DateIndexedSeries>,
}

pub fn load_inputs(loaded: &LoadedConfig, fetcher: &mut Fetcher) -> Result<Inputs, CliError> {
    let c = &loaded.config;
    let treated_source = c
        .treated
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no `treated` source".into()))?;
    let mut treated = load_source(loaded, treated_source, fetcher)?;
    if treated.len() != 1 {
        return Err(CliError::Config(format!(
            "`treated` must resolve to exactly one series, got {}",
            treated.len()
        )));
    }
    let treated = treated.remove(0);
    let mut controls = Vec::new();
    for source in &c.controls {
        for s in load_source(loaded, source, fetcher)? {
            if s.name() != treated.name() {
                controls.push(s);
            }
        }
    }
    let mut covariates = Vec::new();
    for source in &c.covariates {
        covariates.extend(load_source(loaded, source, fetcher)?);
    }

    let n_controls = controls.len();
    let n_daily_cov = covariates.len();
    let mut all = Vec::with_capacity(1 + n_controls + n_daily_cov);
    all.push(treated);
    all.extend(controls);
    all.extend(covariates);
    let mut aligned = align(&all)?.into_iter();
    let treated = aligned.next().expect("treated present");
    let controls: Vec<_> = aligned.by_ref().take(n_controls).collect();
    let mut covariates: Vec<_> = aligned.collect();

    let (start, end) = (treated.start(), treated.end());
    for source in &c.covariates {
        if let SeriesSource::Interpolated { name, points } = source {
            covariates.push(interpolate_to_daily(name.clone(), points, start, end)?);
        }
    }
    let holidays = loaded.holidays()?;
    let mut calendar = seasonal_regressors(start, end, &holidays)?;
    if !c.seasonality.monthly {
        calendar.drain(..11);
    }
    covariates.extend(calendar);
    Ok(Inputs {
        treated,
        controls,
        covariates,
    })
}

/// Pre-period panel, plus the post-period panel when `with_post` is set.
pub struct Periods {
    pub pre: SeriesPanel,
    pub post: Option<SeriesPanel>,
    pub intervention: NaiveDate,
}

pub fn periods(loaded: &LoadedConfig, inputs: &Inputs, with_post: bool) -> Result<Periods, CliError> {
    let c = &loaded.config;
    let intervention = c
        .intervention_date
        .ok_or_else(|| CliError::Config("config has no `intervention_date`".into()))?;
    let first = inputs.treated.start();
    let last = inputs.treated.end();
    let pre_start = match c.pre_period_days {
        Some(days) => intervention - Duration::days(days as i64),
        None => first,
    };
    if pre_start < first || pre_start >= intervention {
        return Err(CliError::Config(format!(
            "pre-period would start on {pre_start}, but common data start on {first} and the intervention is {intervention}"
        )));
    }
    let post_days = c.post_period_days;
    let end = if with_post {
        if post_days == 0 {
            return Err(CliError::Config("post_period_days must be positive".into()));
        }
        intervention + Duration::days(post_days as i64 - 1)
    } else {
        intervention - Duration::days(1)
    };
    if end > last {
        return Err(CliError::Config(format!(
            "common data end on {last}, but the analysis needs data through {end}"
        )));
    }
    let window = |s: &DateIndexedSeries| s.window(pre_start, end);
    let panel = SeriesPanel::new(
        window(&inputs.treated)?,
        inputs.controls.iter().map(window).collect::<Result<_, _>>()?,
        inputs.covariates.iter().map(window).collect::<Result<_, _>>()?,
    )?;
    if with_post {
        let (pre, post) = panel.split_at(intervention)?;
        Ok(Periods {
            pre,
            post: Some(post),
            intervention,
        })
    } else {
        Ok(Periods {
            pre: panel,
            post: None,
            intervention,
        })
    }
}
