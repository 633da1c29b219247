//! Photon-counting statistics: nonclassicality parameters, brightness,
//! fringe visibility, accidental subtraction, dead time, and seeded Poisson
//! simulation of coincidence experiments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biphoton::analyzer::{chsh_from_correlations, correlation_from_values, correlation_settings, ChshAngles, ChshForm, Projector};
use crate::biphoton::tomography::{ProjectorSetting, SettingCounts};
use crate::biphoton::{AnalyzerSetting, DensityMatrix};
use crate::rng;

/// Default coincidence window.
pub const DEFAULT_WINDOW_S: f64 = 1e-9;
pub const DEFAULT_BOOTSTRAP: usize = 1000;

const DOMAIN_SETTINGS: u64 = 1 << 32;
const DOMAIN_BOOTSTRAP: u64 = (1 << 32) + 1;
const DOMAIN_SOURCE: u64 = (1 << 32) + 2;

#[derive(Debug, Error)]
pub enum CountError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("fit failed: {message} (residual rms {residual_rms:.4e} over {points} points)")]
    Fit {
        message: String,
        residual_rms: f64,
        points: usize,
    },
}

fn nonneg(name: &str, v: f64) -> Result<(), CountError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CountError::Domain(format!("{name} = {v} must be finite and nonnegative")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CountError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CountError::Domain(format!("{name} = {v} must be positive")))
    }
}

/// Three-fold rates for a heralded measurement with the idler split onto
/// detectors i and i′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threefold {
    pub r_si: f64,
    pub r_si_prime: f64,
    pub r_sii_prime: f64,
}

/// Rates in s⁻¹, window and integration time in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub singles_s: f64,
    pub singles_i: f64,
    pub coincidences: f64,
    pub window_s: f64,
    pub integration_time_s: f64,
    pub threefold: Option<Threefold>,
}

impl CountRecord {
    pub fn new(singles_s: f64, singles_i: f64, coincidences: f64, window_s: f64) -> Self {
        Self {
            singles_s,
            singles_i,
            coincidences,
            window_s,
            integration_time_s: 1.0,
            threefold: None,
        }
    }

    pub fn validate(&self) -> Result<(), CountError> {
        nonneg("R_s", self.singles_s)?;
        nonneg("R_i", self.singles_i)?;
        nonneg("R_c", self.coincidences)?;
        nonneg("τ_c", self.window_s)?;
        positive("integration time", self.integration_time_s)?;
        if self.coincidences > self.singles_s.min(self.singles_i) {
            return Err(CountError::Domain(format!(
                "R_c = {} exceeds min(R_s, R_i) = {}",
                self.coincidences,
                self.singles_s.min(self.singles_i)
            )));
        }
        if let Some(t) = self.threefold {
            nonneg("R_si", t.r_si)?;
            nonneg("R_si′", t.r_si_prime)?;
            nonneg("R_sii′", t.r_sii_prime)?;
        }
        Ok(())
    }
}

/// α_2d = R_c/(τ_c R_s R_i); 1 for uncorrelated streams.
pub fn alpha_2d(rec: &CountRecord) -> Result<f64, CountError> {
    rec.validate()?;
    positive("τ_c", rec.window_s)?;
    positive("R_s", rec.singles_s)?;
    positive("R_i", rec.singles_i)?;
    Ok(rec.coincidences / (rec.window_s * rec.singles_s * rec.singles_i))
}

/// α_3d = R_sii′ R_s/(R_si R_si′); below 0.5 for an antibunched herald.
pub fn alpha_3d(rec: &CountRecord) -> Result<f64, CountError> {
    rec.validate()?;
    let t = rec
        .threefold
        .ok_or_else(|| CountError::Domain("record has no three-fold rates".into()))?;
    positive("R_si", t.r_si)?;
    positive("R_si′", t.r_si_prime)?;
    Ok(t.r_sii_prime * rec.singles_s / (t.r_si * t.r_si_prime))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Brightness {
    /// R_s R_i / R_c in s⁻¹.
    pub pairs_per_s: f64,
    /// Divided by pump power, s⁻¹ mW⁻¹.
    pub per_mw: Option<f64>,
}

pub fn brightness(rec: &CountRecord, pump_power_mw: Option<f64>) -> Result<Brightness, CountError> {
    rec.validate()?;
    positive("R_c", rec.coincidences)?;
    let pairs_per_s = rec.singles_s * rec.singles_i / rec.coincidences;
    let per_mw = match pump_power_mw {
        Some(p) => {
            positive("pump power", p)?;
            Some(pairs_per_s / p)
        }
        None => None,
    };
    Ok(Brightness { pairs_per_s, per_mw })
}

pub fn accidental_rate(rec: &CountRecord) -> f64 {
    rec.singles_s * rec.singles_i * rec.window_s
}

/// Window for which R_s R_i τ_c equals a given accidental rate.
pub fn window_for_accidentals(singles_s: f64, singles_i: f64, accidental_rate: f64) -> Result<f64, CountError> {
    positive("R_s", singles_s)?;
    positive("R_i", singles_i)?;
    nonneg("accidental rate", accidental_rate)?;
    Ok(accidental_rate / (singles_s * singles_i))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedRate {
    pub rate: f64,
    /// True when the accidentals exceeded R_c and the result was clamped to 0.
    pub floored: bool,
}

/// R_c − R_s R_i τ_c, floored at zero.
pub fn subtract_accidentals(rec: &CountRecord) -> Result<CorrectedRate, CountError> {
    rec.validate()?;
    let raw = rec.coincidences - accidental_rate(rec);
    Ok(CorrectedRate {
        rate: raw.max(0.0),
        floored: raw < 0.0,
    })
}

/// Nonparalyzable dead time: R_meas = R_true/(1 + R_true t_dead).
pub fn dead_time_measured(true_rate: f64, dead_time_s: f64) -> Result<f64, CountError> {
    nonneg("rate", true_rate)?;
    nonneg("dead time", dead_time_s)?;
    Ok(true_rate / (1.0 + true_rate * dead_time_s))
}

/// Inverse of [`dead_time_measured`]; requires R_meas t_dead < 1.
pub fn dead_time_corrected(measured_rate: f64, dead_time_s: f64) -> Result<f64, CountError> {
    nonneg("rate", measured_rate)?;
    nonneg("dead time", dead_time_s)?;
    let x = measured_rate * dead_time_s;
    if x >= 1.0 {
        return Err(CountError::Domain(format!(
            "measured rate {measured_rate} s⁻¹ saturates dead time {dead_time_s} s"
        )));
    }
    Ok(measured_rate / (1.0 - x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub theta_deg: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    /// Fitted visibility clamped to [0, 1].
    pub visibility: f64,
    pub std_error: f64,
    /// Unclamped fit value.
    pub raw_visibility: f64,
    pub mean_rate: f64,
    pub phase_deg: f64,
    pub residual_rms: f64,
}

pub const MIN_FRINGE_POINTS: usize = 8;

/// Least-squares fit of rate = A(1 + V cos(2(θ − θ₀))), optionally after
/// subtracting a constant accidental rate (floored at zero).
///
/// The angles must cover a full 180° period: the sampled span plus one mean
/// sample spacing must reach 180°.
pub fn visibility(points: &[FringePoint], accidental_rate: Option<f64>) -> Result<VisibilityFit, CountError> {
    let n = points.len();
    if n < MIN_FRINGE_POINTS {
        return Err(CountError::Domain(format!("need at least {MIN_FRINGE_POINTS} fringe points, got {n}")));
    }
    for p in points {
        if !p.theta_deg.is_finite() {
            return Err(CountError::Domain("non-finite fringe angle".into()));
        }
        nonneg("fringe rate", p.rate)?;
    }
    let lo = points.iter().map(|p| p.theta_deg).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.theta_deg).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let spacing = span / (n - 1) as f64;
    if span + spacing < 180.0 - 1e-9 {
        return Err(CountError::Domain(format!("fringe spans {span}°, less than one 180° period")));
    }
    let acc = accidental_rate.unwrap_or(0.0);
    nonneg("accidental rate", acc)?;

    // y = a + b cos 2θ + c sin 2θ
    let rows: Vec<([f64; 3], f64)> = points
        .iter()
        .map(|p| {
            let t = 2.0 * p.theta_deg.to_radians();
            ([1.0, t.cos(), t.sin()], (p.rate - acc).max(0.0))
        })
        .collect();
    let mut xtx = nalgebra::Matrix3::<f64>::zeros();
    let mut xty = nalgebra::Vector3::<f64>::zeros();
    for (x, y) in &rows {
        let v = nalgebra::Vector3::from(*x);
        xtx += v * v.transpose();
        xty += v * *y;
    }
    let fail = |message: String, rms: f64| CountError::Fit {
        message,
        residual_rms: rms,
        points: n,
    };
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| fail("angles do not determine the fringe (singular normal matrix)".into(), f64::NAN))?;
    let beta = inv * xty;
    let rss: f64 = rows
        .iter()
        .map(|(x, y)| (y - (beta[0] * x[0] + beta[1] * x[1] + beta[2] * x[2])).powi(2))
        .sum();
    let rms = (rss / n as f64).sqrt();
    let (a, b, c) = (beta[0], beta[1], beta[2]);
    if !(a > 0.0) || !beta.iter().all(|v| v.is_finite()) {
        return Err(fail(format!("non-positive mean rate {a:.4e}"), rms));
    }
    let r = (b * b + c * c).sqrt();
    let v = r / a;
    let cov = inv * (rss / (n - 3) as f64);
    let grad = if r > 0.0 {
        nalgebra::Vector3::new(-v / a, b / (a * r), c / (a * r))
    } else {
        nalgebra::Vector3::new(0.0, 1.0 / a, 0.0)
    };
    let var = (grad.transpose() * cov * grad)[(0, 0)];
    Ok(VisibilityFit {
        visibility: v.clamp(0.0, 1.0),
        std_error: var.max(0.0).sqrt(),
        raw_visibility: v,
        mean_rate: a,
        phase_deg: 0.5 * c.atan2(b).to_degrees(),
        residual_rms: rms,
    })
}

/// Inputs of the coincidence forward model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    /// True pair rate reaching the analyzers, s⁻¹.
    pub pair_rate: f64,
    pub singles_s: f64,
    pub singles_i: f64,
    pub window_s: f64,
    pub integration_time_s: f64,
    pub seed: u64,
}

impl SimulationParams {
    pub fn validate(&self) -> Result<(), CountError> {
        nonneg("pair rate", self.pair_rate)?;
        nonneg("R_s", self.singles_s)?;
        nonneg("R_i", self.singles_i)?;
        nonneg("τ_c", self.window_s)?;
        positive("integration time", self.integration_time_s)
    }

    /// Expected accidental counts per setting.
    pub fn accidental_counts(&self) -> f64 {
        self.singles_s * self.singles_i * self.window_s * self.integration_time_s
    }

    /// Expected coincidences for a setting with projection probability p.
    pub fn expected_counts(&self, p: f64) -> f64 {
        self.pair_rate * p * self.integration_time_s + self.accidental_counts()
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng)
}

/// Poisson coincidence counts per setting: mean (pair_rate·P + R_s R_i τ_c)·T
/// with P the projection probability. The `accidentals` column holds the
/// expected accidental counts. Setting k draws from its own stream.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[ProjectorSetting],
    params: &SimulationParams,
) -> Result<Vec<SettingCounts>, CountError> {
    params.validate()?;
    let acc = params.accidental_counts();
    Ok(settings
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let p = rho.expectation(&s.ket()).max(0.0);
            let mut r = rng::stream(params.seed, DOMAIN_SETTINGS, k as u64);
            let n = poisson(&mut r, params.expected_counts(p));
            SettingCounts::new(s, n, params.integration_time_s, acc)
        })
        .collect())
}

/// Fringe rates (θ_i, coincidences/T) with the signal analyzer fixed.
pub fn simulate_fringe(
    rho: &DensityMatrix,
    theta_s_deg: f64,
    idler_angles_deg: &[f64],
    params: &SimulationParams,
) -> Result<Vec<FringePoint>, CountError> {
    let settings: Vec<ProjectorSetting> = idler_angles_deg
        .iter()
        .map(|&t| AnalyzerSetting::new(theta_s_deg, t).into())
        .collect();
    let counts = simulate_counts(rho, &settings, params)?;
    Ok(idler_angles_deg
        .iter()
        .zip(&counts)
        .map(|(&theta_deg, c)| FringePoint {
            theta_deg,
            rate: c.coincidences / c.integration_time_s,
        })
        .collect())
}

/// The 16 analyzer settings of a CHSH run, four per correlation in the order
/// of [`ChshAngles::pairs`].
pub fn chsh_settings(angles: &ChshAngles) -> Vec<ProjectorSetting> {
    angles
        .pairs()
        .iter()
        .flat_map(|&(a, b)| correlation_settings(a, b))
        .map(ProjectorSetting::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub s: f64,
    pub std_error: f64,
    pub correlations: [f64; 4],
    pub form: ChshForm,
    pub resamples: usize,
}

fn s_from_counts(counts: &[f64], form: ChshForm) -> ([f64; 4], f64) {
    let mut e = [0.0; 4];
    for (q, chunk) in counts.chunks(4).enumerate() {
        e[q] = correlation_from_values([chunk[0], chunk[1], chunk[2], chunk[3]]);
    }
    (e, chsh_from_correlations(e, form))
}

/// S from 16 coincidence counts (optionally accidental-subtracted), with a
/// parametric-bootstrap standard error: every count is redrawn as Poisson
/// around its observed value `resamples` times.
pub fn chsh_from_counts(
    counts: &[SettingCounts],
    form: ChshForm,
    subtract: bool,
    resamples: usize,
    seed: u64,
) -> Result<ChshEstimate, CountError> {
    if counts.len() != 16 {
        return Err(CountError::Domain(format!("CHSH needs 16 settings, got {}", counts.len())));
    }
    let net = |raw: f64, acc: f64| if subtract { (raw - acc).max(0.0) } else { raw };
    let observed: Vec<f64> = counts.iter().map(|c| net(c.coincidences, c.accidentals)).collect();
    let (correlations, s) = s_from_counts(&observed, form);
    let draws: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, DOMAIN_BOOTSTRAP, b as u64);
            let sample: Vec<f64> = counts
                .iter()
                .map(|c| net(poisson(&mut r, c.coincidences), c.accidentals))
                .collect();
            s_from_counts(&sample, form).1
        })
        .collect();
    let std_error = if draws.len() > 1 { crate::poling::mean_std(draws).1 } else { 0.0 };
    Ok(ChshEstimate {
        s,
        std_error,
        correlations,
        form,
        resamples,
    })
}

/// Simulated CHSH run: Poisson counts for the 16 settings then
/// [`chsh_from_counts`].
pub fn chsh_experiment(
    rho: &DensityMatrix,
    angles: &ChshAngles,
    form: ChshForm,
    params: &SimulationParams,
    subtract: bool,
    resamples: usize,
) -> Result<ChshEstimate, CountError> {
    let counts = simulate_counts(rho, &chsh_settings(angles), params)?;
    chsh_from_counts(&counts, form, subtract, resamples, params.seed)
}

/// Event-level model of a pair source feeding a heralding detector s and an
/// idler arm split 50/50 onto detectors i and i′.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    /// Pairs generated per second.
    pub pair_rate: f64,
    /// Probability that a generated signal (idler) photon is detected.
    pub efficiency_s: f64,
    pub efficiency_i: f64,
    /// Uncorrelated background clicks per second at each arm.
    pub background_s: f64,
    pub background_i: f64,
}

impl SourceModel {
    fn validate(&self) -> Result<(), CountError> {
        nonneg("pair rate", self.pair_rate)?;
        nonneg("background_s", self.background_s)?;
        nonneg("background_i", self.background_i)?;
        for (name, e) in [("efficiency_s", self.efficiency_s), ("efficiency_i", self.efficiency_i)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(CountError::Domain(format!("{name} = {e} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Zero-truncated Poisson(λ) by sequential inversion.
fn zero_truncated_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    let u: f64 = rng.random();
    let mut k = 1u64;
    let mut p = lambda * (-lambda).exp() / (-(-lambda).exp_m1());
    let mut cum = p;
    while u > cum && k < 1000 {
        k += 1;
        p *= lambda / k as f64;
        cum += p;
    }
    k
}

/// Simulates threshold detectors over time bins of width τ_c. Only bins with
/// at least one photon are visited: their number is binomial, each holds a
/// zero-truncated Poisson number of events split among pairs and the two
/// background channels. The idler singles and two-fold rates count clicks on
/// either idler detector.
pub fn simulate_source(
    model: &SourceModel,
    window_s: f64,
    integration_time_s: f64,
    seed: u64,
) -> Result<CountRecord, CountError> {
    model.validate()?;
    positive("τ_c", window_s)?;
    positive("integration time", integration_time_s)?;
    let bins = (integration_time_s / window_s).round();
    if !(1.0..1.8e19).contains(&bins) {
        return Err(CountError::Domain(format!("{bins} time bins out of range")));
    }
    let mu = [
        model.pair_rate * window_s,
        model.background_s * window_s,
        model.background_i * window_s,
    ];
    let lambda: f64 = mu.iter().sum();
    let mut r = rng::stream(seed, DOMAIN_SOURCE, 0);
    let active = if lambda > 0.0 {
        let p = -(-lambda).exp_m1();
        Binomial::new(bins as u64, p)
            .map_err(|e| CountError::Domain(e.to_string()))?
            .sample(&mut r)
    } else {
        0
    };
    let (mut s, mut i_any, mut c, mut si, mut si2, mut sii2) = (0u64, 0u64, 0u64, 0u64, 0u64, 0u64);
    for _ in 0..active {
        let events = zero_truncated_poisson(&mut r, lambda);
        let (mut ds, mut di, mut di2) = (false, false, false);
        for _ in 0..events {
            let x: f64 = r.random::<f64>() * lambda;
            let idler_route = |r: &mut ChaCha8Rng, di: &mut bool, di2: &mut bool| {
                if r.random::<bool>() {
                    *di = true;
                } else {
                    *di2 = true;
                }
            };
            if x < mu[0] {
                if r.random::<f64>() < model.efficiency_s {
                    ds = true;
                }
                if r.random::<f64>() < model.efficiency_i {
                    idler_route(&mut r, &mut di, &mut di2);
                }
            } else if x < mu[0] + mu[1] {
                ds = true;
            } else {
                idler_route(&mut r, &mut di, &mut di2);
            }
        }
        let i_click = di || di2;
        s += ds as u64;
        i_any += i_click as u64;
        c += (ds && i_click) as u64;
        si += (ds && di) as u64;
        si2 += (ds && di2) as u64;
        sii2 += (ds && di && di2) as u64;
    }
    let t = integration_time_s;
    Ok(CountRecord {
        singles_s: s as f64 / t,
        singles_i: i_any as f64 / t,
        coincidences: c as f64 / t,
        window_s,
        integration_time_s: t,
        threefold: Some(Threefold {
            r_si: si as f64 / t,
            r_si_prime: si2 as f64 / t,
            r_sii_prime: sii2 as f64 / t,
        }),
    })
}

/// Standard error of α_2d from Poisson statistics of the coincidence count.
pub fn alpha_2d_std_error(rec: &CountRecord) -> Result<f64, CountError> {
    let a = alpha_2d(rec)?;
    let n = rec.coincidences * rec.integration_time_s;
    if n <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(a / n.sqrt())
}
