//! Periodic poling: Fourier content of the two-valued susceptibility, the duty
//! cycle that balances birefringent and quasi phase matching, and Monte Carlo
//! tolerance of the conversion efficiency to domain-boundary placement errors.
//!
//! Domain convention: domain 1 starts at z = 0 and is inverted with length DΛ,
//! domain 2 is uninverted with length (1 − D)Λ, and so on. Boundary j sits at
//! the end of domain j, so N domains have N boundaries and the last one is the
//! exit face. An 8 mm crystal with Λ = 2 mm therefore has N = 8.

use std::f64::consts::PI;

use nalgebra::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum PolingError {
    #[error("duty cycle {0} must lie strictly between 0 and 1")]
    DutyCycle(f64),
    #[error("qpm order must be nonzero for this operation")]
    ZeroOrder,
    #[error("no duty cycle in (0.5, 1) balances order-0 and order-{0} efficiencies")]
    NoBalancedRoot(i32),
    #[error("invalid poling parameter: {0}")]
    Invalid(String),
    #[error("boundary errors with σ = {sigma_um} µm reordered the domains in {attempts} consecutive draws")]
    BoundaryReorder { sigma_um: f64, attempts: usize },
}

/// Unnormalized sinc, sin(x)/x.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn check_duty(duty: f64) -> Result<(), PolingError> {
    if duty > 0.0 && duty < 1.0 {
        Ok(())
    } else {
        Err(PolingError::DutyCycle(duty))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficient {
    pub order: i32,
    /// |χ_m| / χ
    pub magnitude_ratio: f64,
    /// Phase of the harmonic, πmD.
    pub phase: f64,
}

/// Order-m Fourier coefficient of the poled susceptibility relative to the
/// bulk value: |2D − 1| for m = 0, |2D·sinc(πmD)| otherwise.
pub fn fourier_coefficient(duty: f64, order: i32) -> Result<FourierCoefficient, PolingError> {
    check_duty(duty)?;
    let magnitude_ratio = if order == 0 {
        (2.0 * duty - 1.0).abs()
    } else {
        (2.0 * duty * sinc(PI * order as f64 * duty)).abs()
    };
    Ok(FourierCoefficient {
        order,
        magnitude_ratio,
        phase: PI * order as f64 * duty,
    })
}

/// (R0, Rm) relative to χ² = 1.
pub fn efficiency_ratio(duty: f64, order: i32) -> Result<(f64, f64), PolingError> {
    check_duty(duty)?;
    if order == 0 {
        return Err(PolingError::ZeroOrder);
    }
    let r0 = (2.0 * duty - 1.0).powi(2);
    let rm = (2.0 * duty * sinc(PI * order as f64 * duty)).powi(2);
    Ok((r0, rm))
}

/// Smallest D in (0.5, 1) with R0(D) = Rm(D).
///
/// Odd orders always have exactly such a root. For even orders Rm stays below
/// R0 on the whole interval (they only meet at D = 0.5 where both vanish), so
/// [`PolingError::NoBalancedRoot`] is returned.
pub fn solve_balanced_duty_cycle(order: i32) -> Result<f64, PolingError> {
    if order == 0 {
        return Err(PolingError::ZeroOrder);
    }
    // amplitude form is better conditioned than the squared one
    let m = order.unsigned_abs() as f64;
    let g = |d: f64| (2.0 * d - 1.0) - (2.0 * (PI * m * d).sin() / (PI * m)).abs();
    let (lo, hi) = (0.5 + 1e-9, 1.0 - 1e-12);
    let steps = 2000;
    let mut prev = (lo, g(lo));
    for i in 1..=steps {
        let d = lo + (hi - lo) * i as f64 / steps as f64;
        let cur = (d, g(d));
        if prev.1 < 0.0 && cur.1 >= 0.0 {
            let (mut a, mut b) = (prev.0, cur.0);
            while b - a > 4.0 * f64::EPSILON {
                let mid = 0.5 * (a + b);
                if g(mid) < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev = cur;
    }
    Err(PolingError::NoBalancedRoot(order))
}

/// Efficiency reduction 1/[πD·sinc(πD)]² = 1/sin²(πD) relative to D = 0.5
/// first-order QPM.
pub fn efficiency_penalty(duty: f64) -> Result<f64, PolingError> {
    check_duty(duty)?;
    Ok(1.0 / (PI * duty).sin().powi(2))
}

/// What to do when boundary errors would swap two boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum OrderingPolicy {
    /// Redraw the whole error vector, giving up after `max_attempts`.
    Resample { max_attempts: usize },
    /// Keep the draw. The phase-sum efficiency only needs the boundary errors,
    /// so this is the choice for short periods where σ exceeds a domain length.
    Allow,
}

impl Default for OrderingPolicy {
    fn default() -> Self {
        OrderingPolicy::Resample { max_attempts: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub sigma_um: f64,
    pub seed: u64,
    /// Gaussian draws beyond this many σ are redrawn.
    pub truncation_sigmas: f64,
    pub ordering: OrderingPolicy,
}

impl ErrorModel {
    pub fn gaussian(sigma_um: f64, seed: u64) -> Self {
        Self {
            sigma_um,
            seed,
            truncation_sigmas: 3.0,
            ordering: OrderingPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolingStructure {
    pub period_mm: f64,
    pub duty_cycle: f64,
    pub num_domains: usize,
    pub crystal_length_mm: f64,
    /// Nominal boundary positions z_{j,0}, mm.
    pub boundary_positions_mm: Vec<f64>,
    /// Position errors δz_j, µm. Zero mean.
    pub boundary_errors_um: Vec<f64>,
    pub seed: Option<u64>,
}

fn nominal_boundaries_mm(period_mm: f64, duty: f64, n: usize) -> Vec<f64> {
    let mut z = 0.0;
    (0..n)
        .map(|j| {
            z += if j % 2 == 0 { duty * period_mm } else { (1.0 - duty) * period_mm };
            z
        })
        .collect()
}

impl PolingStructure {
    /// Error-free structure.
    pub fn nominal(period_mm: f64, duty: f64, num_domains: usize) -> Result<Self, PolingError> {
        check_duty(duty)?;
        if !(period_mm > 0.0 && period_mm.is_finite()) {
            return Err(PolingError::Invalid(format!("poling period {period_mm} mm")));
        }
        if num_domains == 0 {
            return Err(PolingError::Invalid("need at least one domain".into()));
        }
        let boundary_positions_mm = nominal_boundaries_mm(period_mm, duty, num_domains);
        Ok(Self {
            period_mm,
            duty_cycle: duty,
            num_domains,
            crystal_length_mm: *boundary_positions_mm.last().unwrap(),
            boundary_errors_um: vec![0.0; num_domains],
            boundary_positions_mm,
            seed: None,
        })
    }

    /// Realized boundary positions in µm.
    pub fn realized_um(&self) -> impl Iterator<Item = f64> + '_ {
        self.boundary_positions_mm
            .iter()
            .zip(&self.boundary_errors_um)
            .map(|(z, dz)| z * 1e3 + dz)
    }

    pub fn is_ordered(&self) -> bool {
        is_ordered(&self.boundary_positions_mm, &self.boundary_errors_um)
    }
}

fn is_ordered(nominal_mm: &[f64], errors_um: &[f64]) -> bool {
    let mut prev = 0.0;
    for (z, dz) in nominal_mm.iter().zip(errors_um) {
        let r = z * 1e3 + dz;
        if r <= prev {
            return false;
        }
        prev = r;
    }
    true
}

fn truncated_normals<R: Rng>(rng: &mut R, n: usize, truncation: f64) -> Vec<f64> {
    (0..n)
        .map(|_| loop {
            let z: f64 = rng.sample(StandardNormal);
            if z.abs() <= truncation {
                break z;
            }
        })
        .collect()
}

fn subtract_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Draws zero-mean boundary errors for one structure, honouring the ordering
/// policy. Returns the unit-σ draw (already mean-subtracted) scaled by σ.
fn draw_errors<R: Rng>(
    rng: &mut R,
    nominal_mm: &[f64],
    model: &ErrorModel,
) -> Result<Vec<f64>, PolingError> {
    let n = nominal_mm.len();
    if model.sigma_um == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let attempts = match model.ordering {
        OrderingPolicy::Resample { max_attempts } => max_attempts.max(1),
        OrderingPolicy::Allow => 1,
    };
    for _ in 0..attempts {
        let mut e = truncated_normals(rng, n, model.truncation_sigmas);
        subtract_mean(&mut e);
        e.iter_mut().for_each(|x| *x *= model.sigma_um);
        if matches!(model.ordering, OrderingPolicy::Allow) || is_ordered(nominal_mm, &e) {
            return Ok(e);
        }
    }
    Err(PolingError::BoundaryReorder {
        sigma_um: model.sigma_um,
        attempts,
    })
}

fn check_model(model: &ErrorModel) -> Result<(), PolingError> {
    if !(model.sigma_um >= 0.0 && model.sigma_um.is_finite()) {
        return Err(PolingError::Invalid(format!("σ_z = {} µm", model.sigma_um)));
    }
    if !(model.truncation_sigmas > 0.5) {
        return Err(PolingError::Invalid("truncation must exceed 0.5 σ".into()));
    }
    Ok(())
}

/// Nominal structure from (Λ, D, N) with seeded Gaussian boundary errors.
pub fn realize_structure(
    period_mm: f64,
    duty: f64,
    num_domains: usize,
    model: &ErrorModel,
) -> Result<PolingStructure, PolingError> {
    check_model(model)?;
    let mut s = PolingStructure::nominal(period_mm, duty, num_domains)?;
    let mut rng = rng::stream(model.seed, 0, 0);
    s.boundary_errors_um = draw_errors(&mut rng, &s.boundary_positions_mm, model)?;
    s.seed = Some(model.seed);
    Ok(s)
}

/// Normalized conversion efficiency η = |Σ_j exp(−iΦ_j)|² / N² with
/// Φ_j = Δk·δz_j + δΔk·z_{j,0}. Mismatches in rad/µm.
pub fn conversion_efficiency(structure: &PolingStructure, delta_k: f64, delta_delta_k: f64) -> f64 {
    efficiency_from_errors(&structure.boundary_positions_mm, &structure.boundary_errors_um, delta_k, delta_delta_k)
}

fn efficiency_from_errors(nominal_mm: &[f64], errors_um: &[f64], delta_k: f64, delta_delta_k: f64) -> f64 {
    let n = errors_um.len() as f64;
    let sum: Complex<f64> = nominal_mm
        .iter()
        .zip(errors_um)
        .map(|(z, dz)| Complex::from_polar(1.0, -(delta_k * dz + delta_delta_k * z * 1e3)))
        .sum();
    (sum.norm_sqr() / (n * n)).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub period_mm: f64,
    pub duty_cycle: f64,
    pub num_domains: usize,
    pub qpm_order: i32,
    pub sigma_grid_um: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// δΔk, rad/µm. Zero reproduces the boundary-error-only analysis.
    pub delta_delta_k: f64,
    pub truncation_sigmas: f64,
    pub ordering: OrderingPolicy,
}

impl MonteCarloConfig {
    pub fn new(period_mm: f64, duty_cycle: f64, num_domains: usize, sigma_grid_um: Vec<f64>, samples: usize, seed: u64) -> Self {
        Self {
            period_mm,
            duty_cycle,
            num_domains,
            qpm_order: 1,
            sigma_grid_um,
            samples,
            seed,
            delta_delta_k: 0.0,
            truncation_sigmas: 3.0,
            ordering: OrderingPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PolingError> {
        check_duty(self.duty_cycle)?;
        if self.samples == 0 {
            return Err(PolingError::Invalid("samples must be ≥ 1".into()));
        }
        if self.qpm_order == 0 {
            return Err(PolingError::ZeroOrder);
        }
        if self.sigma_grid_um.is_empty() {
            return Err(PolingError::Invalid("empty σ grid".into()));
        }
        for &s in &self.sigma_grid_um {
            check_model(&ErrorModel {
                sigma_um: s,
                seed: self.seed,
                truncation_sigmas: self.truncation_sigmas,
                ordering: self.ordering,
            })?;
        }
        PolingStructure::nominal(self.period_mm, self.duty_cycle, self.num_domains).map(|_| ())
    }

    /// Grating-compensated mismatch 2πm/Λ entering the phase errors, rad/µm.
    pub fn delta_k(&self) -> f64 {
        2.0 * PI * self.qpm_order as f64 / (self.period_mm * 1e3)
    }
}

/// Per-sample efficiencies for every grid point: `out[sample][grid_index]`.
///
/// Sample `i` draws from stream (seed, i) and reuses the same unit-σ draw
/// across the grid (common random numbers), so curves are smooth in σ and the
/// result does not depend on thread scheduling.
pub(crate) fn sample_efficiencies(cfg: &MonteCarloConfig) -> Result<Vec<Vec<f64>>, PolingError> {
    cfg.validate()?;
    let nominal = nominal_boundaries_mm(cfg.period_mm, cfg.duty_cycle, cfg.num_domains);
    let dk = cfg.delta_k();
    (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(cfg.seed, 1, i as u64);
            let unit = draw_errors(
                &mut rng,
                &nominal,
                &ErrorModel {
                    sigma_um: 1.0,
                    seed: cfg.seed,
                    truncation_sigmas: cfg.truncation_sigmas,
                    ordering: OrderingPolicy::Allow,
                },
            )?;
            cfg.sigma_grid_um
                .iter()
                .enumerate()
                .map(|(g, &sigma)| {
                    let mut errors: Vec<f64> = unit.iter().map(|u| u * sigma).collect();
                    if let OrderingPolicy::Resample { .. } = cfg.ordering {
                        if !is_ordered(&nominal, &errors) {
                            let mut redraw = rng::stream(cfg.seed, 2 + g as u64, i as u64);
                            errors = draw_errors(
                                &mut redraw,
                                &nominal,
                                &ErrorModel {
                                    sigma_um: sigma,
                                    seed: cfg.seed,
                                    truncation_sigmas: cfg.truncation_sigmas,
                                    ordering: cfg.ordering,
                                },
                            )?;
                        }
                    }
                    Ok(efficiency_from_errors(&nominal, &errors, dk, cfg.delta_delta_k))
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub sigma_um: f64,
    pub mean: f64,
    pub std: f64,
    /// Birefringent process: no grating, hence independent of boundary errors
    /// at δΔk = 0.
    pub nbpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyTable {
    pub seed: u64,
    pub samples: usize,
    pub period_mm: f64,
    pub num_domains: usize,
    pub rows: Vec<EfficiencyRow>,
}

/// Mean and sample standard deviation (n − 1; zero for a single value).
pub fn mean_std(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn monte_carlo_efficiency(cfg: &MonteCarloConfig) -> Result<EfficiencyTable, PolingError> {
    let samples = sample_efficiencies(cfg)?;
    let rows = cfg
        .sigma_grid_um
        .iter()
        .enumerate()
        .map(|(g, &sigma_um)| {
            let (mean, std) = mean_std(samples.iter().map(|s| s[g]));
            EfficiencyRow {
                sigma_um,
                mean,
                std,
                nbpm: 1.0,
            }
        })
        .collect();
    Ok(EfficiencyTable {
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

    #[test]
    fn fourier_coefficients_at_half_duty() {
        assert_abs_diff_eq!(fourier_coefficient(0.5, 0).unwrap().magnitude_ratio, 0.0);
        assert_abs_diff_eq!(fourier_coefficient(0.5, 1).unwrap().magnitude_ratio, 2.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn fourier_coefficients_at_design_duty() {
        // hand evaluation: 2D − 1 and 2 sin(πD)/π
        let d: f64 = 0.735;
        let c0 = fourier_coefficient(d, 0).unwrap().magnitude_ratio;
        let c1 = fourier_coefficient(d, 1).unwrap().magnitude_ratio;
        assert_abs_diff_eq!(c0, 0.470, epsilon = 5e-4);
        assert_abs_diff_eq!(c1, 0.4709, epsilon = 5e-5);
        assert_abs_diff_eq!(c1, 2.0 * (PI * d).sin() / PI, epsilon = 1e-15);
        assert!((c0 - c1).abs() < 1e-3);
    }

    #[test]
    fn invalid_duty_cycle() {
        assert_eq!(fourier_coefficient(1.0, 1), Err(PolingError::DutyCycle(1.0)));
        assert_eq!(efficiency_penalty(0.0), Err(PolingError::DutyCycle(0.0)));
        assert!(efficiency_ratio(-0.2, 1).is_err());
    }

    #[test]
    fn efficiency_ratios() {
        let (r0, r1) = efficiency_ratio(0.5, 1).unwrap();
        assert_abs_diff_eq!(r0, 0.0);
        assert_abs_diff_eq!(r1, 4.0 / (PI * PI), epsilon = 1e-15);
        // unpoled limit, approached from inside the open interval
        let (r0, r1) = efficiency_ratio(1.0 - 1e-9, 1).unwrap();
        assert_abs_diff_eq!(r0, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r1, 0.0, epsilon = 1e-8);
        let (r0, r1) = efficiency_ratio(0.735, 1).unwrap();
        assert!((r0 / r1 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn ratios_are_squared_fourier_magnitudes() {
        for &d in &[0.1, 0.3, 0.5, 0.735, 0.9] {
            for m in 1..5 {
                let (r0, rm) = efficiency_ratio(d, m).unwrap();
                assert_eq!(r0, fourier_coefficient(d, 0).unwrap().magnitude_ratio.powi(2));
                assert_eq!(rm, fourier_coefficient(d, m).unwrap().magnitude_ratio.powi(2));
            }
        }
    }

    #[test]
    fn balanced_duty_cycle_first_order() {
        let d = solve_balanced_duty_cycle(1).unwrap();
        assert!((d - 0.735).abs() < 0.002, "{d}");
        let (r0, r1) = efficiency_ratio(d, 1).unwrap();
        assert!((r0 - r1).abs() < 1e-10);
    }

    fn dense_sign_changes(m: i32) -> Vec<f64> {
        // 1e-6 grid over (0.5, 1) on R0 − Rm
        let mut out = Vec::new();
        let mut prev: Option<f64> = None;
        for i in 1..500_000 {
            let d = 0.5 + i as f64 * 1e-6;
            let (r0, rm) = efficiency_ratio(d, m).unwrap();
            let g = r0 - rm;
            if let Some(p) = prev {
                if p.signum() != g.signum() {
                    out.push(d);
                }
            }
            prev = Some(g);
        }
        out
    }

    #[test]
    fn odd_orders_match_dense_scan() {
        for m in [1, 3, 5] {
            let d = solve_balanced_duty_cycle(m).unwrap();
            let scan = dense_sign_changes(m);
            assert_eq!(scan.len(), 1, "order {m}: {scan:?}");
            assert!((scan[0] - d).abs() <= 1e-6, "order {m}: {d} vs {scan:?}");
        }
    }

    #[test]
    fn even_orders_have_no_balanced_duty_cycle() {
        for m in [2, 4] {
            assert!(dense_sign_changes(m).is_empty());
            assert_eq!(solve_balanced_duty_cycle(m), Err(PolingError::NoBalancedRoot(m)));
        }
        assert_eq!(solve_balanced_duty_cycle(0), Err(PolingError::ZeroOrder));
    }

    #[test]
    fn penalty_values() {
        assert_abs_diff_eq!(efficiency_penalty(0.5).unwrap(), 1.0, epsilon = 1e-15);
        let expected = 1.0 / (0.735 * PI).sin().powi(2);
        assert_abs_diff_eq!(efficiency_penalty(0.735).unwrap(), expected, epsilon = 1e-12);
        assert!((expected - 1.828).abs() < 0.01);
        for &d in &[0.1, 0.27, 0.42] {
            assert_abs_diff_eq!(efficiency_penalty(d).unwrap(), efficiency_penalty(1.0 - d).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn nominal_boundaries_reproduce_duty_cycle() {
        let s = PolingStructure::nominal(2.0, 0.735, 8).unwrap();
        assert_abs_diff_eq!(s.crystal_length_mm, 8.0, epsilon = 1e-12);
        for p in s.boundary_positions_mm.chunks(2) {
            let start = p[1] - 2.0;
            assert_abs_diff_eq!((p[0] - start) / 2.0, 0.735, epsilon = 1e-12);
        }
        assert!(s.is_ordered());
    }

    #[test]
    fn realized_structures() {
        let zero = realize_structure(2.0, 0.735, 8, &ErrorModel::gaussian(0.0, 7)).unwrap();
        assert!(zero.boundary_errors_um.iter().all(|&e| e == 0.0));
        for seed in 0..20 {
            let s = realize_structure(2.0, 0.735, 8, &ErrorModel::gaussian(100.0, seed)).unwrap();
            let mean = s.boundary_errors_um.iter().sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-12);
            assert!(s.is_ordered());
            assert_eq!(s, realize_structure(2.0, 0.735, 8, &ErrorModel::gaussian(100.0, seed)).unwrap());
        }
    }

    #[test]
    fn reorder_is_rejected_after_bounded_attempts() {
        let model = ErrorModel {
            ordering: OrderingPolicy::Resample { max_attempts: 5 },
            ..ErrorModel::gaussian(50.0, 1)
        };
        // 15 µm period: domains of ~4 and ~11 µm cannot survive σ = 50 µm
        let err = realize_structure(0.015, 0.735, 64, &model).unwrap_err();
        assert_eq!(err, PolingError::BoundaryReorder { sigma_um: 50.0, attempts: 5 });
        let allowed = ErrorModel { ordering: OrderingPolicy::Allow, ..model };
        assert!(realize_structure(0.015, 0.735, 64, &allowed).is_ok());
    }

    #[test]
    fn perfect_structure_has_unit_efficiency() {
        let s = PolingStructure::nominal(2.0, 0.735, 8).unwrap();
        assert_abs_diff_eq!(conversion_efficiency(&s, 2.0 * PI / 2000.0, 0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_domain_is_always_efficient() {
        let mut s = PolingStructure::nominal(2.0, 0.735, 1).unwrap();
        s.boundary_errors_um = vec![123.0];
        assert_abs_diff_eq!(conversion_efficiency(&s, 0.7, 0.01), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn congruent_phases_give_unit_efficiency() {
        let mut s = PolingStructure::nominal(2.0, 0.5, 4).unwrap();
        let dk = 2.0 * PI / 2000.0;
        // shifts by whole multiples of 2π/Δk keep every phase congruent
        s.boundary_errors_um = vec![2000.0, -2000.0, 0.0, 0.0];
        assert_abs_diff_eq!(conversion_efficiency(&s, dk, 0.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_zero_sigma_is_exact() {
        for &(period, n) in &[(2.0, 8), (0.015, 533)] {
            let mut cfg = MonteCarloConfig::new(period, 0.735, n, vec![0.0], 50, 3);
            cfg.ordering = OrderingPolicy::Allow;
            let t = monte_carlo_efficiency(&cfg).unwrap();
            assert_eq!(t.rows[0].mean, 1.0);
            assert_eq!(t.rows[0].std, 0.0);
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let cfg = MonteCarloConfig::new(2.0, 0.735, 8, vec![0.0, 50.0, 100.0], 200, 11);
        assert_eq!(monte_carlo_efficiency(&cfg).unwrap(), monte_carlo_efficiency(&cfg).unwrap());
    }
}
