mod commands;
mod config;
mod data;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::commands::Context;
use crate::config::LoadedConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Rank candidate controls by correlation and DTW distance.
    Prescreen,
    /// Fit the model on the pre-period and summarize the posterior.
    Fit,
    /// Estimate the intervention effect and plot it.
    Impact,
    /// Rolling-origin cross-validation on the pre-period.
    Validate,
    /// Cross-validate every (pre-period length, trend) combination.
    Grid,
    /// Write a synthetic panel.
    Simulate,
    /// Download pageview sources into the cache and a CSV file.
    Fetch,
}

/// Bayesian structural time-series causal impact analysis.
#[derive(Debug, Parser)]
#[command(name = "impact-bsts", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Analysis configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the MCMC seed (and the synthetic seed for `simulate`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Adds a point-wise effect panel to impact.svg.
    #[arg(long)]
    pointwise_panel: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut loaded = LoadedConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        loaded.config.mcmc.seed = seed;
        if let Some(sim) = loaded.config.simulate.as_mut() {
            sim.synth.seed = seed;
        }
    }
    let out_dir = match cli.out {
        Some(dir) => dir,
        None => loaded.resolve(&loaded.config.output_dir),
    };
    let ctx = Context {
        loaded,
        out_dir,
        pointwise_panel: cli.pointwise_panel,
    };
    match cli.command {
        Command::Prescreen => commands::prescreen(&ctx),
        Command::Fit => commands::fit_cmd(&ctx),
        Command::Impact => commands::impact(&ctx),
        Command::Validate => commands::validate(&ctx),
        Command::Grid => commands::grid(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Fetch => commands::fetch(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,impact_bsts_ingest=info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
