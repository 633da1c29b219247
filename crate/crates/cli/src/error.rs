use std::process::ExitCode;

use ppktp::biphoton::BiphotonError;
use ppktp::countstats::CountError;
use ppktp::dispersion::DispersionError;
use ppktp::phasematch::PhaseMatchError;
use ppktp::poling::PolingError;
use ppktp::spectrum::SpectrumError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        })
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<DispersionError> for CliError {
    fn from(e: DispersionError) -> Self {
        match e {
            DispersionError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PhaseMatchError> for CliError {
    fn from(e: PhaseMatchError) -> Self {
        match e {
            PhaseMatchError::Dispersion(d) => d.into(),
            PhaseMatchError::NoRoot { .. } => CliError::Solver(e.to_string()),
            PhaseMatchError::Invalid(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PolingError> for CliError {
    fn from(e: PolingError) -> Self {
        match e {
            PolingError::NoBalancedRoot(_) | PolingError::BoundaryReorder { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<BiphotonError> for CliError {
    fn from(e: BiphotonError) -> Self {
        match e {
            BiphotonError::Poling(p) => p.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::PhaseMatch(p) => p.into(),
            SpectrumError::Config(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<CountError> for CliError {
    fn from(e: CountError) -> Self {
        match e {
            CountError::Fit { .. } => CliError::Solver(e.to_string()),
            CountError::Domain(_) => CliError::Validation(e.to_string()),
        }
    }
}
