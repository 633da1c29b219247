//! End-to-end paths through the library: design point to spectra, poling
//! errors to entanglement, and simulated counts back to a state.

use ppktp::biphoton::{
    chsh_s, concurrence, entanglement_vs_fabrication, fidelity, reconstruct_with, standard_settings,
    state_from_efficiencies, ChshAngles, ChshForm, DensityMatrix, MleOptions, PolarizationState,
};
use ppktp::countstats::{chsh_experiment, simulate_counts, SimulationParams};
use ppktp::phasematch::{idler_nm, PhaseMatcher, ProcessSpec};
use ppktp::poling::{monte_carlo_efficiency, solve_balanced_duty_cycle, MonteCarloConfig};
use ppktp::spectrum::{joint_spectral_density, marginal_spectrum, AxisSpec, SpectrumAxis};

#[test]
fn design_point_feeds_both_processes() {
    let m = PhaseMatcher::ktp();
    let c = m.pump_for_period(2.0, 25.0, 530.0, 545.0).unwrap();
    let pump = c.point.pump_nm;
    let qpm = m.solve_qpm(&ProcessSpec::qpm(1, 25.0), pump, 2.0).unwrap();
    // same wavelengths, polarizations swapped: the NBPM signal is V and the
    // QPM signal is H
    assert!((qpm.signal_nm - c.point.signal_nm).abs() < 1e-6);
    assert!((qpm.idler_nm - c.point.idler_nm).abs() < 1e-6);
    assert!((idler_nm(pump, c.point.signal_nm) - c.point.idler_nm).abs() < 1e-9);
}

#[test]
fn jspd_peaks_on_the_nbpm_solution() {
    let m = PhaseMatcher::ktp();
    let spec = ProcessSpec::nbpm(25.0);
    let p = m.solve_nbpm(&spec, 532.0).unwrap();
    let s = AxisSpec::around(p.signal_nm).points().unwrap();
    let i = AxisSpec::around(p.idler_nm).points().unwrap();
    let grid = joint_spectral_density(&m, &spec, 532.0, &s, &i, 8.0, None, None).unwrap();
    let (ps, pi) = grid.peak_location();
    assert!((ps - p.signal_nm).abs() <= 0.05 + 1e-9);
    assert!((pi - p.idler_nm).abs() <= 0.1);
    let ms = marginal_spectrum(&grid, SpectrumAxis::Signal);
    assert!(ms.fwhm().unwrap() > 0.1);
}

#[test]
fn fabrication_tables_share_realizations() {
    let d = solve_balanced_duty_cycle(1).unwrap();
    let cfg = MonteCarloConfig::new(2.0, d, 8, vec![0.0, 60.0, 120.0], 300, 3);
    let eff = monte_carlo_efficiency(&cfg).unwrap();
    let ent = entanglement_vs_fabrication(&cfg).unwrap();
    for (e, q) in eff.rows.iter().zip(&ent.rows) {
        assert_eq!(e.sigma_um, q.sigma_um);
        // concurrence 2√η/(1 + η) is concave, so its mean sits below its
        // value at the mean efficiency
        let at_mean = 2.0 * e.mean.sqrt() / (1.0 + e.mean);
        assert!(q.mean_concurrence <= at_mean + 1e-12);
    }
    assert_eq!(ent.rows[0].mean_concurrence, concurrence(&DensityMatrix::from_pure(&PolarizationState::psi_plus())));
}

#[test]
fn counts_to_state_to_metrics() {
    let psi = state_from_efficiencies(1.0, 0.98, 0.0).unwrap();
    let rho = DensityMatrix::from_pure(&psi);
    let params = SimulationParams {
        pair_rate: 4390.0,
        singles_s: 2.18e4,
        singles_i: 2.68e4,
        window_s: 1e-9,
        integration_time_s: 10.0,
        seed: 5,
    };
    let counts = simulate_counts(&rho, &standard_settings(), &params).unwrap();
    let rec = reconstruct_with(&counts, &MleOptions::default()).unwrap();
    assert!(rec.converged);
    assert!(fidelity(&rec.rho, &psi) > 0.99);

    let est = chsh_experiment(&rho, &ChshAngles::CANONICAL, ChshForm::Printed, &params, true, 200).unwrap();
    let exact = chsh_s(&rho, &ChshAngles::CANONICAL);
    assert!((est.s - exact).abs() < 5.0 * est.std_error, "{} vs {exact}", est.s);
    assert!(est.s > 2.0);
}
