//! Refractive-index models for the nonlinear crystals.
//!
//! Coefficient sets are data, not code: the default table is compiled in from
//! `data/sellmeier.json` and alternative sets can be loaded from any file with
//! the same schema. Each model records its citation so that downstream outputs
//! can state which dispersion they were computed with.
//!
//! Supported forms (wavelength λ in µm, temperature T in °C):
//!
//! * `two-pole`: n² = A + B/(λ² − C) + D/(λ² − E), coefficients `[A, B, C, D, E]`.
//!   Combined with the `cubic-inverse-derivative` thermo-optic form
//!   dn/dT = t0 + t1/λ + t2/λ² + t3/λ³ (coefficients `[t0, t1, t2, t3]`), applied
//!   linearly from the reference temperature.
//! * `jundt-temperature`: n² = a1 + b1·f + (a2 + b2·f)/(λ² − (a3 + b3·f)²) +
//!   (a4 + b4·f)/(λ² − a5²) − a6·λ², f = (T − 24.5)(T + 570.82), with
//!   coefficients `[a1..a6]` and thermo coefficients `[b1..b4]`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_TABLE: &str = include_str!("../data/sellmeier.json");

#[derive(Debug, Error)]
pub enum DispersionError {
    #[error("{quantity} {value} is outside the valid range [{lo}, {hi}] of the {crystal} {axis} model ({bound} bound violated)")]
    OutOfRange {
        crystal: Crystal,
        axis: Axis,
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
        bound: &'static str,
    },
    #[error("no dispersion model for {crystal} axis {axis}")]
    MissingModel { crystal: Crystal, axis: Axis },
    #[error("invalid dispersion model for {crystal} axis {axis}: {reason}")]
    InvalidModel {
        crystal: Crystal,
        axis: Axis,
        reason: String,
    },
    #[error("failed to parse dispersion table: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("failed to read dispersion table: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crystal {
    #[serde(rename = "KTP")]
    Ktp,
    #[serde(rename = "LiNbO3")]
    LiNbO3,
}

impl fmt::Display for Crystal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Crystal::Ktp => write!(f, "KTP"),
            Crystal::LiNbO3 => write!(f, "LiNbO3"),
        }
    }
}

/// Principal dielectric axis. In the lab frame y is horizontal (H) and z is
/// vertical (V).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[serde(alias = "H", alias = "h")]
    Y,
    #[serde(alias = "V", alias = "v")]
    Z,
}

impl Axis {
    pub const H: Axis = Axis::Y;
    pub const V: Axis = Axis::Z;

    pub fn polarization_label(self) -> char {
        match self {
            Axis::Y => 'H',
            Axis::Z => 'V',
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Y => write!(f, "y"),
            Axis::Z => write!(f, "z"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SellmeierForm {
    TwoPole,
    JundtTemperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThermoForm {
    CubicInverseDerivative,
    JundtTemperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidRange {
    pub wavelength_um: [f64; 2],
    pub temperature_c: [f64; 2],
}

/// One crystal axis worth of dispersion data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalDispersion {
    pub crystal: Crystal,
    pub axis: Axis,
    pub form: SellmeierForm,
    pub coefficients: Vec<f64>,
    pub thermo_form: ThermoForm,
    pub thermo_coefficients: Vec<f64>,
    pub reference_temperature_c: f64,
    pub valid_range: ValidRange,
    pub citation: String,
}

impl CrystalDispersion {
    fn invalid(&self, reason: impl Into<String>) -> DispersionError {
        DispersionError::InvalidModel {
            crystal: self.crystal,
            axis: self.axis,
            reason: reason.into(),
        }
    }

    /// Checks coefficient counts, range ordering and that no pole of the
    /// Sellmeier form lies inside the wavelength range.
    pub fn validate(&self) -> Result<(), DispersionError> {
        let [wlo, whi] = self.valid_range.wavelength_um;
        let [tlo, thi] = self.valid_range.temperature_c;
        if !(wlo > 0.0 && wlo < whi) || !(tlo < thi) {
            return Err(self.invalid("empty or non-positive validity range"));
        }
        if self
            .coefficients
            .iter()
            .chain(&self.thermo_coefficients)
            .any(|c| !c.is_finite())
        {
            return Err(self.invalid("non-finite coefficient"));
        }
        let poles: Vec<f64> = match (self.form, self.thermo_form) {
            (SellmeierForm::TwoPole, ThermoForm::CubicInverseDerivative) => {
                if self.coefficients.len() != 5 || self.thermo_coefficients.len() != 4 {
                    return Err(self.invalid("two-pole form takes 5 coefficients and 4 thermo coefficients"));
                }
                vec![self.coefficients[2], self.coefficients[4]]
            }
            (SellmeierForm::JundtTemperature, ThermoForm::JundtTemperature) => {
                if self.coefficients.len() != 6 || self.thermo_coefficients.len() != 4 {
                    return Err(self.invalid("jundt form takes 6 coefficients and 4 thermo coefficients"));
                }
                // the UV pole moves with temperature; check both range ends
                let f = |t: f64| jundt_f(t);
                let a3 = self.coefficients[2];
                let b3 = self.thermo_coefficients[2];
                vec![
                    (a3 + b3 * f(tlo)).powi(2),
                    (a3 + b3 * f(thi)).powi(2),
                    self.coefficients[4].powi(2),
                ]
            }
            _ => return Err(self.invalid("sellmeier form and thermo form do not match")),
        };
        for pole in poles {
            if pole > 0.0 {
                let lambda_pole = pole.sqrt();
                if lambda_pole >= wlo && lambda_pole <= whi {
                    return Err(self.invalid(format!(
                        "pole at {lambda_pole} µm lies inside the valid wavelength range"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_range(&self, wavelength_um: f64, temperature_c: f64) -> Result<(), DispersionError> {
        let check = |quantity, value: f64, [lo, hi]: [f64; 2]| {
            let bound = if !(value >= lo) {
                "lower"
            } else if !(value <= hi) {
                "upper"
            } else {
                return Ok(());
            };
            Err(DispersionError::OutOfRange {
                crystal: self.crystal,
                axis: self.axis,
                quantity,
                value,
                lo,
                hi,
                bound,
            })
        };
        check("wavelength (µm)", wavelength_um, self.valid_range.wavelength_um)?;
        check("temperature (°C)", temperature_c, self.valid_range.temperature_c)
    }

    /// Refractive index at `wavelength_um` (µm) and `temperature_c` (°C).
    pub fn refractive_index(&self, wavelength_um: f64, temperature_c: f64) -> Result<f64, DispersionError> {
        self.check_range(wavelength_um, temperature_c)?;
        let l2 = wavelength_um * wavelength_um;
        let c = &self.coefficients;
        let t = &self.thermo_coefficients;
        let n = match self.form {
            SellmeierForm::TwoPole => {
                let n0 = (c[0] + c[1] / (l2 - c[2]) + c[3] / (l2 - c[4])).sqrt();
                let inv = 1.0 / wavelength_um;
                let dndt = t[0] + inv * (t[1] + inv * (t[2] + inv * t[3]));
                n0 + dndt * (temperature_c - self.reference_temperature_c)
            }
            SellmeierForm::JundtTemperature => {
                let f = jundt_f(temperature_c);
                let uv = c[2] + t[2] * f;
                (c[0] + t[0] * f + (c[1] + t[1] * f) / (l2 - uv * uv) + (c[3] + t[3] * f) / (l2 - c[4] * c[4])
                    - c[5] * l2)
                    .sqrt()
            }
        };
        Ok(n)
    }

    /// Angular wavenumber k = 2πn/λ in rad/µm.
    pub fn wavevector(&self, wavelength_um: f64, temperature_c: f64) -> Result<f64, DispersionError> {
        Ok(2.0 * PI * self.refractive_index(wavelength_um, temperature_c)? / wavelength_um)
    }
}

fn jundt_f(temperature_c: f64) -> f64 {
    (temperature_c - 24.5) * (temperature_c + 570.82)
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    schema: u32,
    models: Vec<CrystalDispersion>,
}

/// A set of dispersion models keyed by (crystal, axis).
#[derive(Debug, Clone)]
pub struct DispersionTable {
    models: Vec<CrystalDispersion>,
}

impl DispersionTable {
    pub fn from_json(text: &str) -> Result<Self, DispersionError> {
        let file: TableFile = serde_json::from_str(text)?;
        for m in &file.models {
            m.validate()?;
        }
        Ok(Self { models: file.models })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, DispersionError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The bundled table (Kato & Takaoka KTP, Jundt LiNbO3).
    pub fn bundled() -> Self {
        Self::from_json(DEFAULT_TABLE).expect("bundled sellmeier table is valid")
    }

    pub fn models(&self) -> &[CrystalDispersion] {
        &self.models
    }

    pub fn get(&self, crystal: Crystal, axis: Axis) -> Result<&CrystalDispersion, DispersionError> {
        self.models
            .iter()
            .find(|m| m.crystal == crystal && m.axis == axis)
            .ok_or(DispersionError::MissingModel { crystal, axis })
    }

    /// Both principal axes used for x-propagation in `crystal`.
    pub fn crystal(&self, crystal: Crystal) -> Result<CrystalAxes, DispersionError> {
        Ok(CrystalAxes {
            y: self.get(crystal, Axis::Y)?.clone(),
            z: self.get(crystal, Axis::Z)?.clone(),
        })
    }

    /// Citations of every model, in table order.
    pub fn citations(&self) -> Vec<String> {
        self.models.iter().map(|m| m.citation.clone()).collect()
    }
}

impl Default for DispersionTable {
    fn default() -> Self {
        Self::bundled()
    }
}

/// The y and z axis models of one crystal.
#[derive(Debug, Clone)]
pub struct CrystalAxes {
    pub y: CrystalDispersion,
    pub z: CrystalDispersion,
}

impl CrystalAxes {
    pub fn ktp() -> Self {
        DispersionTable::bundled()
            .crystal(Crystal::Ktp)
            .expect("bundled table has both KTP axes")
    }

    pub fn axis(&self, axis: Axis) -> &CrystalDispersion {
        match axis {
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ktp(axis: Axis) -> CrystalDispersion {
        DispersionTable::bundled().get(Crystal::Ktp, axis).unwrap().clone()
    }

    #[test]
    fn ktp_z_matches_hand_evaluation() {
        // Kato & Takaoka n_z plus the linear thermo-optic term from 20 °C
        let l: f64 = 1.064;
        let n20 = (4.59423 + 0.06206 / (l * l - 0.04763) + 110.80672 / (l * l - 86.12171)).sqrt();
        let dndt = (0.9221 / l.powi(3) - 2.9220 / l.powi(2) + 3.6677 / l - 0.1897) * 1e-5;
        let expected = n20 + dndt * 5.0;
        let n = ktp(Axis::Z).refractive_index(1.064, 25.0).unwrap();
        assert!((n - expected).abs() < 1e-9, "{n} vs {expected}");
    }

    #[test]
    fn temperature_shift_is_thermo_optic_polynomial() {
        let z = ktp(Axis::Z);
        for &l in &[0.5384_f64, 1.0737, 1.3] {
            let dndt = (0.9221 / l.powi(3) - 2.9220 / l.powi(2) + 3.6677 / l - 0.1897) * 1e-5;
            let diff = z.refractive_index(l, 50.0).unwrap() - z.refractive_index(l, 25.0).unwrap();
            assert!((diff - 25.0 * dndt).abs() < 1e-12);
        }
    }

    #[test]
    fn pump_index_exceeds_fundamental_index() {
        let y = ktp(Axis::Y);
        assert!(y.refractive_index(0.5386, 25.0).unwrap() > y.refractive_index(1.0772, 25.0).unwrap());
    }

    #[test]
    fn wavevector_is_two_pi_n_over_lambda() {
        let z = ktp(Axis::Z);
        let n = z.refractive_index(1.0744, 25.8).unwrap();
        let k = z.wavevector(1.0744, 25.8).unwrap();
        assert_relative_eq!(k, 2.0 * PI * n / 1.0744, max_relative = 1e-15);
    }

    #[test]
    fn linbo3_extraordinary_index_is_plausible() {
        let table = DispersionTable::bundled();
        let n = table.get(Crystal::LiNbO3, Axis::Z).unwrap().refractive_index(1.064, 25.0).unwrap();
        assert!((n - 2.156).abs() < 2e-3, "{n}");
    }

    #[test]
    fn out_of_range_names_the_bound() {
        let z = ktp(Axis::Z);
        match z.refractive_index(5.0, 25.0) {
            Err(DispersionError::OutOfRange { bound, quantity, .. }) => {
                assert_eq!(bound, "upper");
                assert!(quantity.starts_with("wavelength"));
            }
            other => panic!("expected range error, got {other:?}"),
        }
        match z.refractive_index(1.0, -40.0) {
            Err(DispersionError::OutOfRange { bound, quantity, .. }) => {
                assert_eq!(bound, "lower");
                assert!(quantity.starts_with("temperature"));
            }
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(z.refractive_index(f64::NAN, 25.0).is_err());
    }

    #[test]
    fn pole_inside_range_is_rejected() {
        let mut m = ktp(Axis::Y);
        m.coefficients[2] = 0.64; // pole at 0.8 µm
        assert!(matches!(m.validate(), Err(DispersionError::InvalidModel { .. })));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = DEFAULT_TABLE.replacen("\"citation\"", "\"cite\"", 1);
        assert!(DispersionTable::from_json(&text).is_err());
    }

    #[test]
    fn h_and_v_alias_axes() {
        let a: Axis = serde_json::from_str("\"H\"").unwrap();
        let b: Axis = serde_json::from_str("\"V\"").unwrap();
        assert_eq!((a, b), (Axis::Y, Axis::Z));
    }
}
