//! Spectral and joint spectral power densities of the pairs for a
//! monochromatic plane-wave pump: a sinc² phase-matching profile along the
//! energy-conservation line, optionally blurred by a bandpass filter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phasematch::{grating_vector, idler_nm, PhaseMatchError, PhaseMatcher, ProcessSpec};
use crate::poling::sinc;

pub const DEFAULT_HALF_WIDTH_NM: f64 = 10.0;
pub const DEFAULT_STEP_NM: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    PhaseMatch(#[from] PhaseMatchError),
    #[error("configuration error: {0}")]
    Config(String),
}

/// sinc²(Δk_eff L/2) with Δk_eff = Δk − 2πm/Λ; `period_mm` is ignored for
/// order-0 processes.
pub fn phase_matching_intensity(
    matcher: &PhaseMatcher,
    spec: &ProcessSpec,
    pump_nm: f64,
    signal_nm: f64,
    length_mm: f64,
    period_mm: Option<f64>,
) -> Result<f64, SpectrumError> {
    if !(length_mm > 0.0 && length_mm.is_finite()) {
        return Err(SpectrumError::Config(format!("crystal length {length_mm} mm must be positive")));
    }
    let grating = match (spec.is_qpm(), period_mm) {
        (true, Some(p)) => grating_vector(spec.qpm_order, p),
        (true, None) => return Err(SpectrumError::Config("QPM process needs a poling period".into())),
        (false, _) => 0.0,
    };
    let dk = matcher.delta_k(spec, pump_nm, signal_nm)? - grating;
    Ok(sinc(dk * length_mm * 1e3 / 2.0).powi(2))
}

/// Evenly spaced wavelengths center ± half_width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub center_nm: f64,
    #[serde(default = "default_half_width")]
    pub half_width_nm: f64,
    #[serde(default = "default_step")]
    pub step_nm: f64,
}

fn default_half_width() -> f64 {
    DEFAULT_HALF_WIDTH_NM
}

fn default_step() -> f64 {
    DEFAULT_STEP_NM
}

impl AxisSpec {
    pub fn around(center_nm: f64) -> Self {
        Self {
            center_nm,
            half_width_nm: DEFAULT_HALF_WIDTH_NM,
            step_nm: DEFAULT_STEP_NM,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>, SpectrumError> {
        let ok = self.center_nm.is_finite()
            && self.half_width_nm.is_finite()
            && self.half_width_nm >= 0.0
            && self.step_nm.is_finite()
            && self.step_nm > 0.0;
        if !ok {
            return Err(SpectrumError::Config(format!("invalid wavelength axis {self:?}")));
        }
        let n = (self.half_width_nm / self.step_nm).round() as i64;
        Ok((-n..=n).map(|k| self.center_nm + k as f64 * self.step_nm).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "shape", deny_unknown_fields)]
pub enum FilterKernel {
    /// Gaussian of the given FWHM, truncated at ±FWHM.
    Gaussian { fwhm_nm: f64 },
    /// Flat passband of width FWHM.
    Rectangular { fwhm_nm: f64 },
}

impl FilterKernel {
    pub fn fwhm_nm(&self) -> f64 {
        match *self {
            FilterKernel::Gaussian { fwhm_nm } | FilterKernel::Rectangular { fwhm_nm } => fwhm_nm,
        }
    }

    fn weight(&self, offset_nm: f64, step_nm: f64) -> f64 {
        match *self {
            FilterKernel::Gaussian { fwhm_nm } => {
                if offset_nm.abs() > fwhm_nm {
                    return 0.0;
                }
                let sigma = fwhm_nm / (2.0 * (2.0 * 2f64.ln()).sqrt());
                (-0.5 * (offset_nm / sigma).powi(2)).exp()
            }
            FilterKernel::Rectangular { fwhm_nm } => {
                // overlap of the passband with the bin around the offset
                let lo = (offset_nm - step_nm / 2.0).max(-fwhm_nm / 2.0);
                let hi = (offset_nm + step_nm / 2.0).min(fwhm_nm / 2.0);
                (hi - lo).max(0.0)
            }
        }
    }
}

/// Relative power density over (signal, idler); `values[s][i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub signal_nm: Vec<f64>,
    pub idler_nm: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl SpectralGrid {
    pub fn total(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// (signal_nm, idler_nm) of the largest value.
    pub fn peak_location(&self) -> (f64, f64) {
        let mut best = (0, 0, f64::MIN);
        for (s, row) in self.values.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (s, i, v);
                }
            }
        }
        (self.signal_nm[best.0], self.idler_nm[best.1])
    }

    pub fn normalized(mut self) -> Self {
        let peak = self.peak();
        if peak > 0.0 {
            self.values.iter_mut().flatten().for_each(|v| *v /= peak);
        }
        self
    }

    pub fn transpose(&self) -> Self {
        let values = (0..self.idler_nm.len())
            .map(|i| self.values.iter().map(|row| row[i]).collect())
            .collect();
        Self {
            signal_nm: self.idler_nm.clone(),
            idler_nm: self.signal_nm.clone(),
            values,
        }
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<f64, SpectrumError> {
    if axis.len() < 2 {
        return Err(SpectrumError::Config(format!("{name} axis needs at least two points")));
    }
    let step = axis[1] - axis[0];
    let uniform = axis
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
    if !(step > 0.0 && uniform) {
        return Err(SpectrumError::Config(format!("{name} axis must be increasing and evenly spaced")));
    }
    Ok(step)
}

/// Unfiltered JSPD: each signal sample carries sinc²(Δk L/2) and deposits it
/// on the idler axis at the energy-conserving idler wavelength, split
/// linearly between the two neighboring idler points.
pub fn ridge(
    matcher: &PhaseMatcher,
    spec: &ProcessSpec,
    pump_nm: f64,
    signal_axis: &[f64],
    idler_axis: &[f64],
    length_mm: f64,
    period_mm: Option<f64>,
) -> Result<SpectralGrid, SpectrumError> {
    check_axis("signal", signal_axis)?;
    let step = check_axis("idler", idler_axis)?;
    let i0 = idler_axis[0];
    let last = idler_axis.len() - 1;
    let values = signal_axis
        .par_iter()
        .map(|&ls| {
            let mut row = vec![0.0; idler_axis.len()];
            let li = idler_nm(pump_nm, ls);
            let x = (li - i0) / step;
            if !(x >= -1e-9 && x <= last as f64 + 1e-9) {
                return Ok(row);
            }
            let intensity = phase_matching_intensity(matcher, spec, pump_nm, ls, length_mm, period_mm)?;
            let x = x.clamp(0.0, last as f64);
            let j = (x.floor() as usize).min(last);
            let frac = x - j as f64;
            if frac < 1e-9 || j == last {
                row[j] += intensity;
            } else if frac > 1.0 - 1e-9 {
                row[j + 1] += intensity;
            } else {
                row[j] += intensity * (1.0 - frac);
                row[j + 1] += intensity * frac;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, SpectrumError>>()?;
    Ok(SpectralGrid {
        signal_nm: signal_axis.to_vec(),
        idler_nm: idler_axis.to_vec(),
        values,
    })
}

/// Normalized kernel weights for each source index, restricted to the axis,
/// so no power leaks past the edges.
fn kernel_matrix(axis: &[f64], filter: &FilterKernel) -> Vec<Vec<(usize, f64)>> {
    let step = axis[1] - axis[0];
    (0..axis.len())
        .map(|src| {
            let mut w: Vec<(usize, f64)> = (0..axis.len())
                .filter_map(|dst| {
                    let v = filter.weight(axis[dst] - axis[src], step);
                    (v > 0.0).then_some((dst, v))
                })
                .collect();
            let total: f64 = w.iter().map(|p| p.1).sum();
            if total > 0.0 {
                w.iter_mut().for_each(|p| p.1 /= total);
            } else {
                w = vec![(src, 1.0)];
            }
            w
        })
        .collect()
}

/// Per-axis convolution with the filter kernel. Total power is conserved.
pub fn convolve(grid: &SpectralGrid, filter: &FilterKernel) -> Result<SpectralGrid, SpectrumError> {
    let fwhm = filter.fwhm_nm();
    if !(fwhm >= 0.0 && fwhm.is_finite()) {
        return Err(SpectrumError::Config(format!("filter FWHM {fwhm} nm must be nonnegative")));
    }
    check_axis("signal", &grid.signal_nm)?;
    check_axis("idler", &grid.idler_nm)?;
    if fwhm == 0.0 {
        return Ok(grid.clone());
    }
    let ks = kernel_matrix(&grid.signal_nm, filter);
    let ki = kernel_matrix(&grid.idler_nm, filter);
    let (ns, ni) = (grid.signal_nm.len(), grid.idler_nm.len());

    let along_idler: Vec<Vec<f64>> = grid
        .values
        .par_iter()
        .map(|row| {
            let mut out = vec![0.0; ni];
            for (src, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    for &(dst, w) in &ki[src] {
                        out[dst] += v * w;
                    }
                }
            }
            out
        })
        .collect();
    let mut values = vec![vec![0.0; ni]; ns];
    for (src, row) in along_idler.iter().enumerate() {
        for &(dst, w) in &ks[src] {
            values[dst].iter_mut().zip(row).for_each(|(o, v)| *o += v * w);
        }
    }
    Ok(SpectralGrid {
        signal_nm: grid.signal_nm.clone(),
        idler_nm: grid.idler_nm.clone(),
        values,
    })
}

/// Filtered JSPD normalized to unit peak. `filter = None` or zero FWHM gives
/// the sampled delta ridge.
#[allow(clippy::too_many_arguments)]
pub fn joint_spectral_density(
    matcher: &PhaseMatcher,
    spec: &ProcessSpec,
    pump_nm: f64,
    signal_axis: &[f64],
    idler_axis: &[f64],
    length_mm: f64,
    period_mm: Option<f64>,
    filter: Option<&FilterKernel>,
) -> Result<SpectralGrid, SpectrumError> {
    let raw = ridge(matcher, spec, pump_nm, signal_axis, idler_axis, length_mm, period_mm)?;
    let out = match filter {
        Some(f) => convolve(&raw, f)?,
        None => raw,
    };
    if out.peak() <= 0.0 {
        return Err(SpectrumError::Config(
            "grid does not intersect the energy-conservation line".into(),
        ));
    }
    Ok(out.normalized())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumAxis {
    Signal,
    Idler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub wavelength_nm: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn peak_wavelength(&self) -> f64 {
        let (k, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
        self.wavelength_nm[k]
    }

    /// Full width at half maximum with linear interpolation of the crossings
    /// nearest the peak; `None` if either side never drops below half.
    pub fn fwhm(&self) -> Option<f64> {
        let (k, peak) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
        let half = peak / 2.0;
        let x = &self.wavelength_nm;
        let y = &self.values;
        let cross = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
        let left = (0..k).rev().find(|&j| y[j] < half).map(|j| cross(j, j + 1))?;
        let right = (k + 1..y.len()).find(|&j| y[j] < half).map(|j| cross(j - 1, j))?;
        Some(right - left)
    }
}

/// Sum over the other axis, normalized to unit peak.
pub fn marginal_spectrum(grid: &SpectralGrid, axis: SpectrumAxis) -> Spectrum {
    let (wavelength_nm, mut values): (Vec<f64>, Vec<f64>) = match axis {
        SpectrumAxis::Signal => (grid.signal_nm.clone(), grid.values.iter().map(|r| r.iter().sum()).collect()),
        SpectrumAxis::Idler => (
            grid.idler_nm.clone(),
            (0..grid.idler_nm.len())
                .map(|i| grid.values.iter().map(|r| r[i]).sum())
                .collect(),
        ),
    };
    let peak = values.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    Spectrum { wavelength_nm, values }
}

/// Single-photon profile sinc²(Δk L/2) over a signal axis.
pub fn signal_profile(
    matcher: &PhaseMatcher,
    spec: &ProcessSpec,
    pump_nm: f64,
    signal_axis: &[f64],
    length_mm: f64,
    period_mm: Option<f64>,
) -> Result<Spectrum, SpectrumError> {
    let values = signal_axis
        .iter()
        .map(|&ls| phase_matching_intensity(matcher, spec, pump_nm, ls, length_mm, period_mm))
        .collect::<Result<_, _>>()?;
    Ok(Spectrum {
        wavelength_nm: signal_axis.to_vec(),
        values,
    })
}
