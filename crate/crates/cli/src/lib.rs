//! Command-line front end for the `ppktp` library: one subcommand per dataset,
//! JSON configuration in, CSV/JSON files plus a metadata sidecar out.

// `!(x > y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Run;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "ppktp", version, about = "Coexisting-process PPKTP source design and analysis")]
pub struct Cli {
    /// JSON run configuration; defaults are used for anything not given.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Coincidence window τ_c in seconds; overrides counts and stats records.
    #[arg(long = "tau-c", global = true)]
    pub tau_c: Option<f64>,
    /// Detector dead time in seconds for the stats records.
    #[arg(long = "dead-time", global = true)]
    pub dead_time: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coexistence poling periods and wavelengths over a pump sweep.
    Design,
    /// Balanced duty cycle for QPM order m.
    Dutycycle {
        /// QPM order; overrides the configured order
        #[arg(long, value_parser = clap::value_parser!(i32).range(1..))]
        m: Option<i32>,
    },
    /// Efficiency and entanglement under random domain-boundary errors.
    Montecarlo,
    /// Filtered joint spectral density and marginals.
    Jspd,
    /// Two-photon polarization fringes and visibilities.
    Fringes,
    /// CHSH parameter from simulated coincidence counts.
    Chsh,
    /// Maximum-likelihood state tomography.
    Tomography {
        /// Measured counts CSV; simulated from the configured state when absent.
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// Anticorrelation, brightness and accidental figures for count records.
    Stats,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Design => "design",
            Command::Dutycycle { .. } => "dutycycle",
            Command::Montecarlo => "montecarlo",
            Command::Jspd => "jspd",
            Command::Fringes => "fringes",
            Command::Chsh => "chsh",
            Command::Tomography { .. } => "tomography",
            Command::Stats => "stats",
        }
    }
}

/// Configuration after applying command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tau_c {
        cfg.counts.window_s = t;
        cfg.stats.records.iter_mut().for_each(|r| r.window_s = t);
        if let Some(s) = cfg.stats.source.as_mut() {
            s.window_s = t;
        }
    }
    if let Some(t) = cli.dead_time {
        cfg.stats.records.iter_mut().for_each(|r| r.dead_time_s = Some(t));
    }
    match &cli.command {
        Command::Dutycycle { m: Some(m) } => cfg.dutycycle.order = *m,
        Command::Tomography { counts: Some(p) } => cfg.tomography.counts_path = Some(p.clone()),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a subcommand and writes its files. Returns the summary text and the
/// written paths.
pub fn run(cli: &Cli) -> Result<(String, Vec<PathBuf>), CliError> {
    let cfg = resolve_config(cli)?;
    let table = commands::load_dispersion(&cfg)?;
    let Run { output, summary } = match cli.command {
        Command::Design => commands::design(&cfg, &table, cli.format)?,
        Command::Dutycycle { .. } => commands::dutycycle(&cfg, cli.format)?,
        Command::Montecarlo => commands::montecarlo(&cfg, cli.format)?,
        Command::Jspd => commands::jspd(&cfg, &table, cli.format)?,
        Command::Fringes => commands::fringes(&cfg, cli.format)?,
        Command::Chsh => commands::chsh(&cfg, cli.format)?,
        Command::Tomography { .. } => commands::tomography(&cfg, cli.format)?,
        Command::Stats => commands::stats(&cfg, cli.format)?,
    };
    let written = output.write(&cli.out, cli.command.name(), &cfg, &table.citations())?;
    Ok((summary, written))
}
