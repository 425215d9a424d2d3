use impact_bsts::gibbs::FitError;
use impact_bsts::impact::ImpactError;
use impact_bsts::series::SeriesError;
use impact_bsts::synth::SynthError;
use impact_bsts::validate::ValidateError;
use impact_bsts_ingest::{CsvError, FetchError};
use thiserror::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_NETWORK: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Network(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Network(_) => EXIT_NETWORK,
        }
    }

    pub fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Config(format!("{context}: {e}"))
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::InvalidRange { .. } | FetchError::RangeTooLarge { .. } | FetchError::Series(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Network(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidConfig(_) | FitError::Series(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(format!("sampler failed: {e}")),
        }
    }
}

impl From<ImpactError> for CliError {
    fn from(e: ImpactError) -> Self {
        match e {
            ImpactError::Model(fit) => fit.into(),
            ImpactError::MissingPostCovariate(_)
            | ImpactError::InvalidHorizon { .. }
            | ImpactError::Misaligned { .. }
            | ImpactError::LengthMismatch { .. }
            | ImpactError::MissingActual(_)
            | ImpactError::InvalidLevel(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ValidateError> for CliError {
    fn from(e: ValidateError) -> Self {
        match e {
            ValidateError::Fit(fit) => fit.into(),
            ValidateError::Impact(impact) => impact.into(),
            ValidateError::Series(s) => s.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}
