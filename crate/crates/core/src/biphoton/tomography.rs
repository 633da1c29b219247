//! Two-qubit polarization tomography: linear inversion followed by a
//! maximum-likelihood fit over Cholesky-parameterized density matrices.
//!
//! Arm projectors: H, V, D = (H+V)/√2, A = (H−V)/√2, R = (H−iV)/√2,
//! L = (H+iV)/√2, or a linear analyzer given as an angle in degrees.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::analyzer::{product_ket, AnalyzerSetting, Projector};
use super::state::{c, DensityMatrix, Ket, Matrix, C64};
use super::BiphotonError;
use crate::lbfgs;

/// Eigenvalue floor used when clipping the linear estimate onto the PSD cone.
const CLIP_FLOOR: f64 = 1e-12;
const MIN_RELATIVE_SINGULAR_VALUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmProjector {
    H,
    V,
    D,
    A,
    R,
    L,
    Linear(f64),
}

impl ArmProjector {
    pub fn amplitudes(&self) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            ArmProjector::H => [c(1.0, 0.0), c(0.0, 0.0)],
            ArmProjector::V => [c(0.0, 0.0), c(1.0, 0.0)],
            ArmProjector::D => [c(s, 0.0), c(s, 0.0)],
            ArmProjector::A => [c(s, 0.0), c(-s, 0.0)],
            ArmProjector::R => [c(s, 0.0), c(0.0, -s)],
            ArmProjector::L => [c(s, 0.0), c(0.0, s)],
            ArmProjector::Linear(deg) => {
                let t = deg.to_radians();
                [c(t.cos(), 0.0), c(t.sin(), 0.0)]
            }
        }
    }
}

impl fmt::Display for ArmProjector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmProjector::H => f.write_str("H"),
            ArmProjector::V => f.write_str("V"),
            ArmProjector::D => f.write_str("D"),
            ArmProjector::A => f.write_str("A"),
            ArmProjector::R => f.write_str("R"),
            ArmProjector::L => f.write_str("L"),
            ArmProjector::Linear(deg) => write!(f, "{deg}"),
        }
    }
}

impl FromStr for ArmProjector {
    type Err = BiphotonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Ok(match t.to_ascii_uppercase().as_str() {
            "H" => ArmProjector::H,
            "V" => ArmProjector::V,
            "D" => ArmProjector::D,
            "A" => ArmProjector::A,
            "R" => ArmProjector::R,
            "L" => ArmProjector::L,
            _ => match t.parse::<f64>() {
                Ok(v) if v.is_finite() => ArmProjector::Linear(v),
                _ => return Err(BiphotonError::Parse(format!("unknown setting label {t:?}"))),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorSetting {
    pub signal: ArmProjector,
    pub idler: ArmProjector,
}

impl ProjectorSetting {
    pub fn new(signal: ArmProjector, idler: ArmProjector) -> Self {
        Self { signal, idler }
    }
}

impl Projector for ProjectorSetting {
    fn ket(&self) -> Ket {
        product_ket(self.signal.amplitudes(), self.idler.amplitudes())
    }
}

impl From<AnalyzerSetting> for ProjectorSetting {
    fn from(a: AnalyzerSetting) -> Self {
        Self::new(ArmProjector::Linear(a.theta_s_deg), ArmProjector::Linear(a.theta_i_deg))
    }
}

fn product_settings(arms: &[ArmProjector]) -> Vec<ProjectorSetting> {
    arms.iter()
        .flat_map(|&s| arms.iter().map(move |&i| ProjectorSetting::new(s, i)))
        .collect()
}

/// The 16 settings {H, V, D, R} × {H, V, D, R}.
pub fn standard_settings() -> Vec<ProjectorSetting> {
    use ArmProjector::*;
    product_settings(&[H, V, D, R])
}

/// The over-complete 36 settings {H, V, D, A, R, L}².
pub fn overcomplete_settings() -> Vec<ProjectorSetting> {
    use ArmProjector::*;
    product_settings(&[H, V, D, A, R, L])
}

/// One row of coincidence data. `accidentals` is the expected accidental
/// count over the same integration time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub setting_label_s: String,
    pub setting_label_i: String,
    pub coincidences: f64,
    pub integration_time_s: f64,
    pub accidentals: f64,
}

impl SettingCounts {
    pub fn new(setting: &ProjectorSetting, coincidences: f64, integration_time_s: f64, accidentals: f64) -> Self {
        Self {
            setting_label_s: setting.signal.to_string(),
            setting_label_i: setting.idler.to_string(),
            coincidences,
            integration_time_s,
            accidentals,
        }
    }

    pub fn setting(&self) -> Result<ProjectorSetting, BiphotonError> {
        Ok(ProjectorSetting::new(self.setting_label_s.parse()?, self.setting_label_i.parse()?))
    }

    /// Coincidences minus accidentals, floored at zero.
    pub fn net_counts(&self) -> f64 {
        (self.coincidences - self.accidentals).max(0.0)
    }

    fn validate(&self) -> Result<(), BiphotonError> {
        let ok = self.coincidences.is_finite()
            && self.coincidences >= 0.0
            && self.accidentals.is_finite()
            && self.accidentals >= 0.0
            && self.integration_time_s.is_finite()
            && self.integration_time_s > 0.0;
        if ok {
            Ok(())
        } else {
            Err(BiphotonError::Domain(format!(
                "counts must be nonnegative and integration time positive ({}, {})",
                self.setting_label_s, self.setting_label_i
            )))
        }
    }
}

/// Noiseless expected counts: pair_rate · T · ⟨ψ_k|ρ|ψ_k⟩ per setting.
pub fn forward_counts(
    rho: &DensityMatrix,
    settings: &[ProjectorSetting],
    pair_rate: f64,
    integration_time_s: f64,
) -> Vec<SettingCounts> {
    settings
        .iter()
        .map(|s| {
            let p = rho.expectation(&s.ket()).max(0.0);
            SettingCounts::new(s, pair_rate * integration_time_s * p, integration_time_s, 0.0)
        })
        .collect()
}

fn pauli(k: usize) -> [[C64; 2]; 2] {
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    match k {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
        _ => [[o, z], [z, -o]],
    }
}

/// σ_a ⊗ σ_b, index a·4 + b.
fn pauli_product(index: usize) -> Matrix {
    let (a, b) = (pauli(index / 4), pauli(index % 4));
    Matrix::from_fn(|r, k| a[r / 2][k / 2] * b[r % 2][k % 2])
}

struct Prepared {
    projectors: Vec<Matrix>,
    times: Vec<f64>,
    counts: Vec<f64>,
}

fn prepare(data: &[SettingCounts]) -> Result<Prepared, BiphotonError> {
    if data.is_empty() {
        return Err(BiphotonError::Config("no tomography settings".into()));
    }
    let mut projectors = Vec::with_capacity(data.len());
    let mut times = Vec::with_capacity(data.len());
    let mut counts = Vec::with_capacity(data.len());
    for row in data {
        row.validate()?;
        let k = row.setting()?.ket();
        projectors.push(k * k.adjoint());
        times.push(row.integration_time_s);
        counts.push(row.net_counts());
    }
    if counts.iter().all(|&n| n == 0.0) {
        return Err(BiphotonError::DegenerateData("all coincidence counts are zero".into()));
    }
    Ok(Prepared {
        projectors,
        times,
        counts,
    })
}

/// Least-squares linear inversion over the Pauli-product basis. The result is
/// Hermitian with unit trace but not necessarily positive.
pub fn linear_inversion(data: &[SettingCounts]) -> Result<Matrix, BiphotonError> {
    let p = prepare(data)?;
    Ok(linear_estimate(&p)?.0)
}

/// Returns the unit-trace estimate and the fitted total intensity (counts per
/// second summed over a complete basis).
fn linear_estimate(p: &Prepared) -> Result<(Matrix, f64), BiphotonError> {
    let basis: Vec<Matrix> = (0..16).map(pauli_product).collect();
    let a = DMatrix::from_fn(p.projectors.len(), 16, |k, j| (p.projectors[k] * basis[j]).trace().re);
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > smax * MIN_RELATIVE_SINGULAR_VALUE)
        .count();
    if rank < 16 {
        return Err(BiphotonError::Config(format!(
            "projector set spans only {rank} of 16 two-qubit operator dimensions"
        )));
    }
    let y = DVector::from_iterator(p.counts.len(), p.counts.iter().zip(&p.times).map(|(n, t)| n / t));
    let svd = a.svd(true, true);
    let r = svd
        .solve(&y, smax * MIN_RELATIVE_SINGULAR_VALUE)
        .map_err(|e| BiphotonError::Config(e.to_string()))?;
    let mut m = Matrix::zeros();
    for (j, b) in basis.iter().enumerate() {
        m += b * c(r[j], 0.0);
    }
    let intensity = m.trace().re;
    if !(intensity > 0.0) {
        return Err(BiphotonError::DegenerateData(format!(
            "linear inversion gives non-positive total intensity {intensity:.3e}"
        )));
    }
    let m = (m + m.adjoint()) * c(0.5 / intensity, 0.0);
    Ok((m, intensity))
}

/// Projects a Hermitian unit-trace matrix onto the PSD cone by flooring its
/// eigenvalues and renormalizing.
pub fn clip_to_physical(m: &Matrix, floor: f64) -> Matrix {
    let e = m.symmetric_eigen();
    let vals = e.eigenvalues.map(|v| v.max(floor));
    let total: f64 = vals.iter().sum();
    let d = Matrix::from_diagonal(&vals.map(|v| c(v / total, 0.0)));
    let out = e.eigenvectors * d * e.eigenvectors.adjoint();
    (out + out.adjoint()) * c(0.5, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Log-likelihood improvement below which iteration stops.
    pub tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    /// Unit-trace linear-inversion estimate before the physical projection.
    pub linear: Matrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

// 16 real parameters: 4 real diagonal entries then (re, im) of the 6
// strictly-lower entries of T, with M = T T†.
const LOWER: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

fn to_lower(x: &[f64]) -> Matrix {
    let mut t = Matrix::zeros();
    for i in 0..4 {
        t[(i, i)] = c(x[i], 0.0);
    }
    for (n, &(i, j)) in LOWER.iter().enumerate() {
        t[(i, j)] = c(x[4 + 2 * n], x[5 + 2 * n]);
    }
    t
}

fn from_lower(t: &Matrix) -> Vec<f64> {
    let mut x = vec![0.0; 16];
    for i in 0..4 {
        x[i] = t[(i, i)].re;
    }
    for (n, &(i, j)) in LOWER.iter().enumerate() {
        x[4 + 2 * n] = t[(i, j)].re;
        x[5 + 2 * n] = t[(i, j)].im;
    }
    x
}

/// Negative Poisson log-likelihood −Σ (n_k ln μ_k − μ_k), μ_k = T_k tr(Π_k M),
/// and its gradient in the Cholesky parameters.
fn objective(p: &Prepared, x: &[f64]) -> (f64, Vec<f64>) {
    let t = to_lower(x);
    let m = t * t.adjoint();
    let mut ll = 0.0;
    let mut g = Matrix::zeros();
    for ((proj, &time), &n) in p.projectors.iter().zip(&p.times).zip(&p.counts) {
        let mu = time * (proj * m).trace().re;
        if n > 0.0 {
            if !(mu > 0.0) {
                return (f64::INFINITY, vec![0.0; 16]);
            }
            ll += n * mu.ln();
        }
        ll -= mu;
        let w = if n > 0.0 { n / mu - 1.0 } else { -1.0 };
        g += proj * c(w * time, 0.0);
    }
    // d(ll) = 2 Re tr(T† G dT)
    let gt = g * t;
    let mut grad = vec![0.0; 16];
    for i in 0..4 {
        grad[i] = -2.0 * gt[(i, i)].re;
    }
    for (n, &(i, j)) in LOWER.iter().enumerate() {
        grad[4 + 2 * n] = -2.0 * gt[(i, j)].re;
        grad[5 + 2 * n] = -2.0 * gt[(i, j)].im;
    }
    (-ll, grad)
}

pub fn reconstruct_with(data: &[SettingCounts], opts: &MleOptions) -> Result<Reconstruction, BiphotonError> {
    let p = prepare(data)?;
    let (linear, intensity) = linear_estimate(&p)?;
    let start = clip_to_physical(&linear, CLIP_FLOOR) * c(intensity, 0.0);
    let t0 = start
        .cholesky()
        .ok_or_else(|| BiphotonError::InvalidDensity("clipped estimate is not positive definite".into()))?
        .l();
    let out = lbfgs::minimize(
        |x| objective(&p, x),
        from_lower(&t0),
        &lbfgs::Options {
            memory: 10,
            max_iterations: opts.max_iterations,
            tolerance: opts.tolerance,
        },
    );
    let t = to_lower(&out.x);
    let rho = DensityMatrix::from_unnormalized(t * t.adjoint())?;
    Ok(Reconstruction {
        rho,
        linear,
        log_likelihood: -out.value,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Reconstructs a physical density matrix from 16 or more projective counts.
pub fn tomography_reconstruct(data: &[SettingCounts]) -> Result<DensityMatrix, BiphotonError> {
    Ok(reconstruct_with(data, &MleOptions::default())?.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::metrics::fidelity;
    use crate::biphoton::state::PolarizationState;
    use approx::assert_abs_diff_eq;

    #[test]
    fn labels_round_trip() {
        for s in ["H", "v", "D", "A", "R", "L", "22.5", "-45"] {
            let p: ArmProjector = s.parse().unwrap();
            let again: ArmProjector = p.to_string().parse().unwrap();
            assert_eq!(p, again);
        }
        assert!("X".parse::<ArmProjector>().is_err());
    }

    #[test]
    fn pauli_products_are_orthogonal() {
        for a in 0..16 {
            for b in 0..16 {
                let tr = (pauli_product(a) * pauli_product(b)).trace();
                let expected = if a == b { 4.0 } else { 0.0 };
                assert_abs_diff_eq!(tr.re, expected, epsilon = 1e-15);
                assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn bell_state_round_trip() {
        let psi = PolarizationState::psi_plus();
        let rho = DensityMatrix::from_pure(&psi);
        for settings in [standard_settings(), overcomplete_settings()] {
            let data = forward_counts(&rho, &settings, 439.0, 10.0);
            let linear = linear_inversion(&data).unwrap();
            assert!((linear - rho.matrix()).norm() < 1e-12);
            let out = tomography_reconstruct(&data).unwrap();
            assert!(fidelity(&out, &psi) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn mixed_state_round_trip() {
        let rho = DensityMatrix::werner(0.6).unwrap();
        let data = forward_counts(&rho, &standard_settings(), 1000.0, 1.0);
        let out = tomography_reconstruct(&data).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-5, "{}", out.matrix());
    }

    #[test]
    fn integration_time_is_normalized_out() {
        let rho = DensityMatrix::werner(0.9).unwrap();
        let mut data = forward_counts(&rho, &standard_settings(), 500.0, 1.0);
        for (k, row) in data.iter_mut().enumerate() {
            let scale = 1.0 + k as f64 * 0.25;
            row.coincidences *= scale;
            row.integration_time_s *= scale;
        }
        let linear = linear_inversion(&data).unwrap();
        assert!((linear - rho.matrix()).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_settings_are_rejected() {
        use ArmProjector::*;
        let settings = product_settings(&[H, V, D]);
        let data = forward_counts(&DensityMatrix::maximally_mixed(), &settings, 100.0, 1.0);
        assert!(matches!(linear_inversion(&data), Err(BiphotonError::Config(_))));
    }

    #[test]
    fn zero_counts_are_degenerate() {
        let data = forward_counts(&DensityMatrix::maximally_mixed(), &standard_settings(), 0.0, 1.0);
        assert!(matches!(tomography_reconstruct(&data), Err(BiphotonError::DegenerateData(_))));
    }

    #[test]
    fn negative_counts_are_rejected() {
        let mut data = forward_counts(&DensityMatrix::maximally_mixed(), &standard_settings(), 10.0, 1.0);
        data[3].coincidences = -1.0;
        assert!(matches!(tomography_reconstruct(&data), Err(BiphotonError::Domain(_))));
    }

    #[test]
    fn accidentals_are_subtracted() {
        let rho = DensityMatrix::werner(0.9).unwrap();
        let mut data = forward_counts(&rho, &standard_settings(), 500.0, 2.0);
        for row in &mut data {
            row.coincidences += 7.0;
            row.accidentals = 7.0;
        }
        let linear = linear_inversion(&data).unwrap();
        assert!((linear - rho.matrix()).norm() < 1e-12);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let rho = DensityMatrix::werner(0.7).unwrap();
        let mut data = forward_counts(&rho, &standard_settings(), 300.0, 1.0);
        data[0].coincidences += 5.0;
        let p = prepare(&data).unwrap();
        let x: Vec<f64> = (0..16).map(|k| 0.3 + 0.05 * k as f64).collect();
        let (_, g) = objective(&p, &x);
        for k in 0..16 {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let fd = (objective(&p, &xp).0 - objective(&p, &xm).0) / (2.0 * h);
            assert_abs_diff_eq!(g[k], fd, epsilon = 1e-4 * fd.abs().max(1.0));
        }
    }
}
