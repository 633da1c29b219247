//! Polarization state of the photon pair, entanglement metrics, analyzer
//! correlations and state tomography.

pub mod analyzer;
pub mod fabrication;
pub mod metrics;
pub mod state;
pub mod tomography;

use thiserror::Error;

use crate::poling::PolingError;

pub use analyzer::{
    chsh_from_correlations, chsh_s, chsh_s_symmetric, chsh_s_with, coincidence_probability, correlation,
    correlation_from_values, correlation_settings, fringe, AnalyzerSetting, ChshAngles, ChshForm, Projector,
};
pub use fabrication::{entanglement_vs_fabrication, EntanglementRow, EntanglementTable};
pub use metrics::{concurrence, fidelity};
pub use state::{state_from_efficiencies, DensityMatrix, MatrixJson, PolarizationState};
pub use tomography::{
    forward_counts, linear_inversion, overcomplete_settings, reconstruct_with, standard_settings,
    tomography_reconstruct, ArmProjector, MleOptions, ProjectorSetting, Reconstruction, SettingCounts,
};

#[derive(Debug, Error)]
pub enum BiphotonError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Poling(#[from] PolingError),
}
