//! Entanglement quality of the coexisting-process source under random
//! domain-boundary errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{concurrence, fidelity};
use super::state::{state_from_efficiencies, DensityMatrix, PolarizationState};
use super::BiphotonError;
use crate::poling::{mean_std, sample_efficiencies, MonteCarloConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementRow {
    pub sigma_um: f64,
    pub mean_concurrence: f64,
    pub std_concurrence: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementTable {
    pub seed: u64,
    pub samples: usize,
    pub period_mm: f64,
    pub num_domains: usize,
    pub rows: Vec<EntanglementRow>,
}

/// Concurrence and Ψ⁺ fidelity of the state whose QPM amplitude is scaled
/// by √η relative to a balanced design.
pub fn metrics_for_efficiency(eta: f64) -> Result<(f64, f64), BiphotonError> {
    let rho = DensityMatrix::from_pure(&state_from_efficiencies(1.0, eta, 0.0)?);
    Ok((concurrence(&rho), fidelity(&rho, &PolarizationState::psi_plus())))
}

/// Uses the same sample streams as the efficiency Monte Carlo, so both tables
/// describe the same realizations for a given seed.
pub fn entanglement_vs_fabrication(cfg: &MonteCarloConfig) -> Result<EntanglementTable, BiphotonError> {
    let samples = sample_efficiencies(cfg)?;
    let per_sample: Vec<Vec<(f64, f64)>> = samples
        .par_iter()
        .map(|etas| etas.iter().map(|&e| metrics_for_efficiency(e)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let rows = cfg
        .sigma_grid_um
        .iter()
        .enumerate()
        .map(|(g, &sigma_um)| {
            let (mean_concurrence, std_concurrence) = mean_std(per_sample.iter().map(|s| s[g].0));
            let (mean_fidelity, std_fidelity) = mean_std(per_sample.iter().map(|s| s[g].1));
            EntanglementRow {
                sigma_um,
                mean_concurrence,
                std_concurrence,
                mean_fidelity,
                std_fidelity,
            }
        })
        .collect();
    Ok(EntanglementTable {
        seed: cfg.seed,
        samples: cfg.samples,
        period_mm: cfg.period_mm,
        num_domains: cfg.num_domains,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config(samples: usize, grid: Vec<f64>) -> MonteCarloConfig {
        MonteCarloConfig::new(2.0, 0.735, 8, grid, samples, 7)
    }

    #[test]
    fn perfect_fabrication_gives_bell_state() {
        let t = entanglement_vs_fabrication(&config(50, vec![0.0])).unwrap();
        let r = t.rows[0];
        assert_abs_diff_eq!(r.mean_concurrence, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.mean_fidelity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.std_concurrence, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_per_sample() {
        let (c, f) = metrics_for_efficiency(0.81).unwrap();
        assert_abs_diff_eq!(c, 2.0 * 0.9 / 1.81, epsilon = 1e-12);
        assert_abs_diff_eq!(f, 1.9f64.powi(2) / (2.0 * 1.81), epsilon = 1e-12);
    }

    #[test]
    fn entanglement_stays_high_at_100_um() {
        let t = entanglement_vs_fabrication(&config(2000, vec![100.0])).unwrap();
        let r = t.rows[0];
        assert!(r.mean_fidelity >= 0.99, "{r:?}");
        assert!(r.mean_concurrence >= 0.95, "{r:?}");
    }

    #[test]
    fn concurrence_decreases_with_sigma() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 20.0).collect();
        let t = entanglement_vs_fabrication(&config(2000, grid)).unwrap();
        for w in t.rows.windows(2) {
            let noise = 3.0 * w[1].std_concurrence / (t.samples as f64).sqrt();
            assert!(w[1].mean_concurrence <= w[0].mean_concurrence + noise, "{w:?}");
        }
    }
}
