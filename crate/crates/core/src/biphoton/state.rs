use nalgebra::{Complex, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::BiphotonError;

pub type C64 = Complex<f64>;
pub type Ket = Vector4<C64>;
pub type Matrix = Matrix4<C64>;

/// Basis order, signal qubit first.
pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;
pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Normalized pure polarization state of a photon pair over (HH, HV, VH, VV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    amplitudes: Ket,
}

impl PolarizationState {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self, BiphotonError> {
        let ket = Ket::from(amplitudes);
        let norm = ket.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(BiphotonError::Domain("state vector has zero or non-finite norm".into()));
        }
        Ok(Self { amplitudes: ket / c(norm, 0.0) })
    }

    pub fn from_ket(ket: Ket) -> Result<Self, BiphotonError> {
        Self::new([ket[0], ket[1], ket[2], ket[3]])
    }

    /// (|HV⟩ + |VH⟩)/√2
    pub fn psi_plus() -> Self {
        let a = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            amplitudes: Ket::new(c(0.0, 0.0), a, a, c(0.0, 0.0)),
        }
    }

    /// |θ_s⟩ ⊗ |θ_i⟩ with |θ⟩ = cos θ|H⟩ + e^{iφ} sin θ|V⟩ per arm.
    pub fn product(theta_s_deg: f64, phi_s: f64, theta_i_deg: f64, phi_i: f64) -> Self {
        let arm = |t: f64, p: f64| {
            let t = t.to_radians();
            [c(t.cos(), 0.0), C64::from_polar(t.sin(), p)]
        };
        let s = arm(theta_s_deg, phi_s);
        let i = arm(theta_i_deg, phi_i);
        Self {
            amplitudes: Ket::new(s[0] * i[0], s[0] * i[1], s[1] * i[0], s[1] * i[1]),
        }
    }

    pub fn ket(&self) -> &Ket {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        Self {
            amplitudes: self.amplitudes * C64::from_polar(1.0, phase),
        }
    }
}

/// Two-photon pair state from relative NBPM and QPM generation rates:
/// (√R_nbpm |HV⟩ + e^{iφ} √R_qpm |VH⟩) / √(R_nbpm + R_qpm).
pub fn state_from_efficiencies(r_nbpm: f64, r_qpm: f64, phase: f64) -> Result<PolarizationState, BiphotonError> {
    if !(r_nbpm >= 0.0 && r_qpm >= 0.0) || !(r_nbpm + r_qpm > 0.0) || !phase.is_finite() {
        return Err(BiphotonError::Domain(format!(
            "rates must be nonnegative and not both zero (got {r_nbpm}, {r_qpm})"
        )));
    }
    let mut a = [c(0.0, 0.0); 4];
    a[HV] = c(r_nbpm.sqrt(), 0.0);
    a[VH] = C64::from_polar(r_qpm.sqrt(), phase);
    PolarizationState::new(a)
}

/// Validated two-qubit density matrix: Hermitian, unit trace, positive
/// semidefinite within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix);

impl DensityMatrix {
    pub fn new(m: Matrix) -> Result<Self, BiphotonError> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(herm <= HERMITIAN_TOL) {
            return Err(BiphotonError::InvalidDensity(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = m.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOL && tr.im.abs() <= TRACE_TOL) {
            return Err(BiphotonError::InvalidDensity(format!("trace {tr} ≠ 1")));
        }
        let min_eig = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if !(min_eig >= -POSITIVITY_TOL) {
            return Err(BiphotonError::InvalidDensity(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self(m))
    }

    /// Hermitizes and renormalizes before validating; for matrices assembled
    /// numerically.
    pub fn from_unnormalized(m: Matrix) -> Result<Self, BiphotonError> {
        let h = (m + m.adjoint()) * c(0.5, 0.0);
        let tr = h.trace().re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(BiphotonError::InvalidDensity(format!("trace {tr} is not positive")));
        }
        Self::new(h / c(tr, 0.0))
    }

    pub fn from_pure(state: &PolarizationState) -> Self {
        let k = state.ket();
        Self(k * k.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix::identity() * c(0.25, 0.0))
    }

    /// p·ρ + (1 − p)·I/4.
    pub fn with_white_noise(&self, p: f64) -> Result<Self, BiphotonError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(BiphotonError::Domain(format!("mixing weight {p} outside [0, 1]")));
        }
        Ok(Self(self.0 * c(p, 0.0) + Self::maximally_mixed().0 * c(1.0 - p, 0.0)))
    }

    /// Werner state p|Ψ⁺⟩⟨Ψ⁺| + (1 − p)I/4.
    pub fn werner(p: f64) -> Result<Self, BiphotonError> {
        Self::from_pure(&PolarizationState::psi_plus()).with_white_noise(p)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = self.0.symmetric_eigenvalues();
        let mut v = [e[0], e[1], e[2], e[3]];
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// ⟨ψ|ρ|ψ⟩ for a normalized ket.
    pub fn expectation(&self, ket: &Ket) -> f64 {
        (ket.adjoint() * self.0 * ket)[(0, 0)].re
    }
}

/// Serializable 4×4 complex matrix as separate real and imaginary arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub basis: Vec<String>,
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
}

impl From<&DensityMatrix> for MatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let mut real = [[0.0; 4]; 4];
        let mut imag = [[0.0; 4]; 4];
        for r in 0..4 {
            for k in 0..4 {
                real[r][k] = m[(r, k)].re;
                imag[r][k] = m[(r, k)].im;
            }
        }
        Self {
            basis: BASIS_LABELS.iter().map(|s| s.to_string()).collect(),
            real,
            imag,
        }
    }
}

impl TryFrom<&MatrixJson> for DensityMatrix {
    type Error = BiphotonError;

    fn try_from(j: &MatrixJson) -> Result<Self, Self::Error> {
        DensityMatrix::new(Matrix::from_fn(|r, k| c(j.real[r][k], j.imag[r][k])))
    }
}
