//! JSON analysis configuration. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use impact_bsts::gibbs::{McmcConfig, ModelSpec, RegressionPriorSettings, TrendKind};
use impact_bsts::impact::DEFAULT_CREDIBLE_LEVEL;
use impact_bsts::series::Holiday;
use impact_bsts::synth::{Intervention, SynthSpec};
use impact_bsts::validate::{CvOptions, GridSpec};
use impact_bsts_ingest::{Access, Agent, PageviewQuery};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_POST_DAYS: usize = 42;

const BUILTIN_CALENDARS: [(&str, &str); 2] = [
    ("in-hindu", include_str!("../data/in-hindu.json")),
    ("western", include_str!("../data/western.json")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SeriesSource {
    /// Columns of a CSV file; all non-date columns when `columns` is absent.
    Csv {
        path: PathBuf,
        #[serde(default)]
        columns: Option<Vec<String>>,
        #[serde(default = "default_date_column")]
        date_column: String,
    },
    /// One aggregate pageview series, named `name` or the query label.
    Pageviews {
        project: String,
        #[serde(default)]
        access: Access,
        #[serde(default)]
        agent: Agent,
        start: NaiveDate,
        end: NaiveDate,
        #[serde(default)]
        name: Option<String>,
    },
    /// Low-frequency observations linearly interpolated to daily values.
    Interpolated {
        name: String,
        points: Vec<(NaiveDate, f64)>,
    },
}

impl SeriesSource {
    pub fn pageview_query(&self) -> Option<(PageviewQuery, Option<&str>)> {
        match self {
            SeriesSource::Pageviews {
                project,
                access,
                agent,
                start,
                end,
                name,
            } => Some((
                PageviewQuery {
                    project: project.clone(),
                    access: *access,
                    agent: *agent,
                    start: *start,
                    end: *end,
                },
                name.as_deref(),
            )),
            _ => None,
        }
    }
}

fn default_date_column() -> String {
    "date".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HolidaySource {
    /// A built-in calendar name or a path to a calendar file.
    Calendar(String),
    Explicit(Vec<Holiday>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seasonality {
    /// Day-of-week state component.
    pub weekly: bool,
    /// Month-of-year indicator regressors.
    pub monthly: bool,
}

impl Default for Seasonality {
    fn default() -> Self {
        Self {
            weekly: true,
            monthly: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrescreenSettings {
    pub enabled: bool,
    pub max_k: usize,
    pub dtw_window: Option<usize>,
}

impl Default for PrescreenSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            max_k: impact_bsts::prescreen::MAX_SELECTED,
            dtw_window: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApiSettings {
    pub base_url: Option<String>,
    pub user_agent: Option<String>,
    pub min_delay_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSettings {
    #[serde(default)]
    pub synth: SynthSpec,
    #[serde(default)]
    pub intervention: Option<Intervention>,
    #[serde(default = "default_simulate_file")]
    pub file: String,
}

fn default_simulate_file() -> String {
    "synthetic.csv".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub treated: Option<SeriesSource>,
    pub controls: Vec<SeriesSource>,
    pub covariates: Vec<SeriesSource>,
    /// First post-period day. The pre-period ends the day before.
    pub intervention_date: Option<NaiveDate>,
    /// Pre-period length; `None` starts at the first common data day.
    pub pre_period_days: Option<usize>,
    pub post_period_days: usize,
    pub seasonality: Seasonality,
    pub holidays: Option<HolidaySource>,
    pub trend: TrendKind,
    pub prescreen: PrescreenSettings,
    pub regression: RegressionPriorSettings,
    pub mcmc: McmcConfig,
    pub credible_level: f64,
    pub validation: CvOptions,
    pub grid: GridSpec,
    pub simulate: Option<SimulateSettings>,
    pub api: ApiSettings,
    pub output_dir: PathBuf,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            treated: None,
            controls: Vec::new(),
            covariates: Vec::new(),
            intervention_date: None,
            pre_period_days: None,
            post_period_days: DEFAULT_POST_DAYS,
            seasonality: Seasonality::default(),
            holidays: None,
            trend: TrendKind::LocalLevel,
            prescreen: PrescreenSettings::default(),
            regression: RegressionPriorSettings::default(),
            mcmc: McmcConfig::default(),
            credible_level: DEFAULT_CREDIBLE_LEVEL,
            validation: CvOptions::default(),
            grid: GridSpec::default(),
            simulate: None,
            api: ApiSettings::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// A parsed config plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: AnalysisConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: AnalysisConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { config, base_dir })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        let c = &self.config;
        let mut spec = ModelSpec::new(c.trend).with_seasonal(c.seasonality.weekly.then_some(7));
        spec.regression = c.regression.clone();
        spec
    }

    pub fn holidays(&self) -> Result<Vec<Holiday>, CliError> {
        match &self.config.holidays {
            None => Ok(Vec::new()),
            Some(HolidaySource::Explicit(list)) => Ok(list.clone()),
            Some(HolidaySource::Calendar(name)) => {
                if let Some((_, text)) = BUILTIN_CALENDARS.iter().find(|(n, _)| n == name) {
                    return parse_calendar(name, text);
                }
                let path = self.resolve(Path::new(name));
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    CliError::Config(format!(
                        "holiday calendar `{name}` is neither built in ({}) nor a readable file: {e}",
                        builtin_calendar_names().join(", ")
                    ))
                })?;
                parse_calendar(name, &text)
            }
        }
    }
}

pub fn builtin_calendar_names() -> Vec<&'static str> {
    BUILTIN_CALENDARS.iter().map(|(n, _)| *n).collect()
}

fn parse_calendar(name: &str, text: &str) -> Result<Vec<Holiday>, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("holiday calendar `{name}` is malformed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_calendars_parse() {
        for (name, text) in BUILTIN_CALENDARS {
            let holidays = parse_calendar(name, text).unwrap();
            assert!(holidays.iter().any(|h| h.name == "new_year"));
            assert!(holidays.iter().all(|h| h.dates.len() >= 11));
        }
        let hindu = parse_calendar("in-hindu", BUILTIN_CALENDARS[0].1).unwrap();
        assert_eq!(hindu.len(), 5);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let c: AnalysisConfig = serde_json::from_str(
            r#"{"treated": {"csv": {"path": "a.csv", "columns": ["y"]}},
                "intervention_date": "2021-03-01", "holidays": "western"}"#,
        )
        .unwrap();
        assert_eq!(c.post_period_days, 42);
        assert!(c.seasonality.weekly);
        assert_eq!(c.holidays, Some(HolidaySource::Calendar("western".into())));
        assert_eq!(c.mcmc, McmcConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<AnalysisConfig>(r#"{"tretaed": null}"#).is_err());
    }
}
