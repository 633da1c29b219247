//! Design and analysis toolkit for polarization-entangled photon pairs from a
//! single PPKTP crystal in which a birefringent and a quasi-phase-matched
//! type-II process coexist.
//!
//! * [`dispersion`]: temperature-dependent Sellmeier models (KTP, LiNbO3)
//! * [`phasematch`]: phase-matching solvers and design sweeps
//! * [`poling`]: duty-cycle balancing and fabrication-error Monte Carlo
//! * [`biphoton`]: pair state, entanglement metrics, CHSH, tomography
//! * [`spectrum`]: spectral and joint spectral power densities
//! * [`countstats`]: counting statistics and seeded count simulation

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biphoton;
pub mod countstats;
pub mod dispersion;
mod lbfgs;
pub mod phasematch;
pub mod poling;
pub mod rng;
mod roots;
pub mod spectrum;

use thiserror::Error;

/// Union of the module errors, for callers that drive several stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dispersion(#[from] dispersion::DispersionError),
    #[error(transparent)]
    PhaseMatch(#[from] phasematch::PhaseMatchError),
    #[error(transparent)]
    Poling(#[from] poling::PolingError),
    #[error(transparent)]
    Biphoton(#[from] biphoton::BiphotonError),
    #[error(transparent)]
    Spectrum(#[from] spectrum::SpectrumError),
    #[error(transparent)]
    Count(#[from] countstats::CountError),
}
