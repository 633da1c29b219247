//! Run configuration. Every section is optional and falls back to the
//! defaults below; unknown keys are rejected so typos in physics parameters
//! surface as errors.

use std::path::{Path, PathBuf};

use ppktp::biphoton::{ChshAngles, ChshForm};
use ppktp::poling::OrderingPolicy;
use ppktp::spectrum::FilterKernel;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub dispersion: DispersionConfig,
    pub design: DesignConfig,
    pub dutycycle: DutyCycleConfig,
    pub montecarlo: MonteCarloSection,
    pub jspd: JspdConfig,
    pub state: StateConfig,
    pub counts: CountsConfig,
    pub fringes: FringesConfig,
    pub chsh: ChshConfig,
    pub tomography: TomographyConfig,
    pub stats: StatsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 1,
            dispersion: DispersionConfig::default(),
            design: DesignConfig::default(),
            dutycycle: DutyCycleConfig::default(),
            montecarlo: MonteCarloSection::default(),
            jspd: JspdConfig::default(),
            state: StateConfig::default(),
            counts: CountsConfig::default(),
            fringes: FringesConfig::default(),
            chsh: ChshConfig::default(),
            tomography: TomographyConfig::default(),
            stats: StatsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    /// Alternative Sellmeier table; the bundled one is used when absent.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub temperature_c: f64,
    pub pump_start_nm: f64,
    pub pump_stop_nm: f64,
    pub pump_step_nm: f64,
    /// Fixed poling period for the wavelength-vs-pump dataset and the design
    /// point search.
    pub period_mm: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            temperature_c: 25.0,
            pump_start_nm: 530.0,
            pump_stop_nm: 545.0,
            pump_step_nm: 0.1,
            period_mm: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DutyCycleConfig {
    pub order: i32,
}

impl Default for DutyCycleConfig {
    fn default() -> Self {
        Self { order: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonGrating {
    pub label: String,
    pub period_mm: f64,
    pub num_domains: usize,
    pub duty_cycle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub period_mm: f64,
    /// Defaults to the balanced duty cycle for `qpm_order`.
    pub duty_cycle: Option<f64>,
    pub num_domains: usize,
    pub qpm_order: i32,
    pub sigma_grid_um: Vec<f64>,
    pub samples: usize,
    pub truncation_sigmas: f64,
    pub ordering: OrderingPolicy,
    /// Short-period gratings evaluated on the same σ grid. Their boundary
    /// errors may exceed a domain length, so draws are kept unordered.
    pub comparisons: Vec<ComparisonGrating>,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            period_mm: 2.0,
            duty_cycle: None,
            num_domains: 8,
            qpm_order: 1,
            sigma_grid_um: (0..=15).map(|k| k as f64 * 10.0).collect(),
            samples: 2000,
            truncation_sigmas: 3.0,
            ordering: OrderingPolicy::default(),
            comparisons: vec![ComparisonGrating {
                label: "PPLN 15 um".into(),
                period_mm: 0.015,
                num_domains: 533,
                duty_cycle: 0.5,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JspdConfig {
    pub pump_nm: f64,
    pub temperature_c: f64,
    pub length_mm: f64,
    pub filter: Option<FilterKernel>,
    pub half_width_nm: f64,
    pub step_nm: f64,
}

impl Default for JspdConfig {
    fn default() -> Self {
        Self {
            pump_nm: 538.6,
            temperature_c: 25.8,
            length_mm: 8.0,
            filter: Some(FilterKernel::Gaussian { fwhm_nm: 1.0 }),
            half_width_nm: ppktp::spectrum::DEFAULT_HALF_WIDTH_NM,
            step_nm: ppktp::spectrum::DEFAULT_STEP_NM,
        }
    }
}

/// (√R_nbpm |HV⟩ + e^{iφ} √R_qpm |VH⟩), optionally mixed with white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    pub r_nbpm: f64,
    pub r_qpm: f64,
    pub phase_rad: f64,
    /// Weight q of I/4 in (1 − q)|ψ⟩⟨ψ| + q I/4.
    pub white_noise: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            r_nbpm: 1.0,
            r_qpm: 1.0,
            phase_rad: 0.0,
            white_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// Expected counts, no sampling.
    None,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountsConfig {
    pub pair_rate: f64,
    pub singles_s: f64,
    pub singles_i: f64,
    pub window_s: f64,
    pub integration_time_s: f64,
    pub noise: Noise,
    pub subtract_accidentals: bool,
}

impl Default for CountsConfig {
    fn default() -> Self {
        Self {
            pair_rate: 439.0,
            singles_s: 2.18e4,
            singles_i: 2.68e4,
            window_s: ppktp::countstats::DEFAULT_WINDOW_S,
            integration_time_s: 10.0,
            noise: Noise::Poisson,
            subtract_accidentals: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FringesConfig {
    pub signal_angles_deg: Vec<f64>,
    pub idler_start_deg: f64,
    pub idler_stop_deg: f64,
    pub idler_step_deg: f64,
}

impl Default for FringesConfig {
    fn default() -> Self {
        Self {
            signal_angles_deg: vec![45.0, -45.0],
            idler_start_deg: 0.0,
            idler_stop_deg: 360.0,
            idler_step_deg: 5.0,
        }
    }
}

impl FringesConfig {
    pub fn idler_angles(&self) -> Vec<f64> {
        let n = ((self.idler_stop_deg - self.idler_start_deg) / self.idler_step_deg + 1e-9).floor() as usize;
        (0..=n).map(|k| self.idler_start_deg + k as f64 * self.idler_step_deg).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChshConfig {
    pub angles: ChshAngles,
    pub form: ChshForm,
    pub bootstrap: usize,
}

impl Default for ChshConfig {
    fn default() -> Self {
        Self {
            angles: ChshAngles::CANONICAL,
            form: ChshForm::Printed,
            bootstrap: ppktp::countstats::DEFAULT_BOOTSTRAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingSet {
    Standard,
    Overcomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographyConfig {
    pub settings: SettingSet,
    /// Measured counts (CSV). When absent, counts are simulated from `state`.
    pub counts_path: Option<PathBuf>,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            settings: SettingSet::Standard,
            counts_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreefoldRates {
    pub r_si: f64,
    pub r_si_prime: f64,
    pub r_sii_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsRecord {
    pub label: String,
    pub singles_s: f64,
    pub singles_i: f64,
    pub coincidences: f64,
    #[serde(default = "default_window")]
    pub window_s: f64,
    #[serde(default)]
    pub pump_power_mw: Option<f64>,
    /// Spectral bandwidth the rates were collected over, for per-nm figures.
    #[serde(default)]
    pub bandwidth_nm: Option<f64>,
    #[serde(default)]
    pub dead_time_s: Option<f64>,
    #[serde(default)]
    pub threefold: Option<ThreefoldRates>,
}

fn default_window() -> f64 {
    ppktp::countstats::DEFAULT_WINDOW_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSimulation {
    pub pair_rate: f64,
    pub efficiency_s: f64,
    pub efficiency_i: f64,
    pub background_s: f64,
    pub background_i: f64,
    pub window_s: f64,
    pub integration_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    pub records: Vec<StatsRecord>,
    pub source: Option<SourceSimulation>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        // Quoted singles for the 120 µW NBPM measurement, with R_c back-solved
        // from the quoted 3.56e6 s⁻¹ mW⁻¹ brightness, and the entangled-source
        // rates.
        Self {
            records: vec![
                StatsRecord {
                    label: "nbpm_120uW".into(),
                    singles_s: 1.2e4,
                    singles_i: 1.72e4,
                    coincidences: 1.2e4 * 1.72e4 / (3.56e6 * 0.12),
                    window_s: default_window(),
                    pump_power_mw: Some(0.12),
                    bandwidth_nm: Some(3.0),
                    dead_time_s: None,
                    threefold: None,
                },
                StatsRecord {
                    label: "entangled_source".into(),
                    singles_s: 2.18e4,
                    singles_i: 2.68e4,
                    coincidences: 439.0,
                    window_s: default_window(),
                    pump_power_mw: None,
                    bandwidth_nm: None,
                    dead_time_s: None,
                    threefold: None,
                },
            ],
            source: Some(SourceSimulation {
                pair_rate: 1.0e5,
                efficiency_s: 0.1,
                efficiency_i: 0.1,
                background_s: 100.0,
                background_i: 100.0,
                window_s: default_window(),
                integration_time_s: 10.0,
            }),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }
}

fn finite(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be positive")))
    }
}

fn nonneg(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be nonnegative")))
    }
}

fn fraction(name: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must lie in [0, 1]")))
    }
}

impl DesignConfig {
    pub fn pumps(&self) -> Vec<f64> {
        let n = ((self.pump_stop_nm - self.pump_start_nm) / self.pump_step_nm + 1e-9).floor() as usize;
        (0..=n).map(|k| self.pump_start_nm + k as f64 * self.pump_step_nm).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        finite("design.temperature_c", self.temperature_c)?;
        positive("design.pump_start_nm", self.pump_start_nm)?;
        positive("design.pump_step_nm", self.pump_step_nm)?;
        positive("design.period_mm", self.period_mm)?;
        finite("design.pump_stop_nm", self.pump_stop_nm)?;
        if !(self.pump_stop_nm > self.pump_start_nm) {
            return Err(invalid(format!(
                "design pump range [{}, {}] nm is empty",
                self.pump_start_nm, self.pump_stop_nm
            )));
        }
        if self.pumps().len() > 100_000 {
            return Err(invalid("design pump sweep exceeds 100000 points"));
        }
        Ok(())
    }
}

impl MonteCarloSection {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("montecarlo.period_mm", self.period_mm)?;
        if let Some(d) = self.duty_cycle {
            if !(d > 0.0 && d < 1.0) {
                return Err(invalid(format!("montecarlo.duty_cycle = {d} must lie in (0, 1)")));
            }
        }
        if self.num_domains == 0 || self.samples == 0 {
            return Err(invalid("montecarlo.num_domains and samples must be ≥ 1"));
        }
        if self.qpm_order <= 0 {
            return Err(invalid("montecarlo.qpm_order must be ≥ 1"));
        }
        if self.sigma_grid_um.is_empty() {
            return Err(invalid("montecarlo.sigma_grid_um is empty"));
        }
        for &s in &self.sigma_grid_um {
            nonneg("montecarlo.sigma_grid_um entry", s)?;
        }
        positive("montecarlo.truncation_sigmas", self.truncation_sigmas)?;
        for c in &self.comparisons {
            positive("comparison period_mm", c.period_mm)?;
            if c.num_domains == 0 || !(c.duty_cycle > 0.0 && c.duty_cycle < 1.0) {
                return Err(invalid(format!("comparison {:?} needs num_domains ≥ 1 and duty in (0, 1)", c.label)));
            }
        }
        Ok(())
    }
}

impl JspdConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("jspd.pump_nm", self.pump_nm)?;
        finite("jspd.temperature_c", self.temperature_c)?;
        positive("jspd.length_mm", self.length_mm)?;
        positive("jspd.half_width_nm", self.half_width_nm)?;
        positive("jspd.step_nm", self.step_nm)?;
        if self.half_width_nm / self.step_nm > 5000.0 {
            return Err(invalid("jspd grid exceeds 10001 points per axis"));
        }
        if let Some(f) = self.filter {
            nonneg("jspd.filter.fwhm_nm", f.fwhm_nm())?;
        }
        Ok(())
    }
}

impl StateConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        nonneg("state.r_nbpm", self.r_nbpm)?;
        nonneg("state.r_qpm", self.r_qpm)?;
        if self.r_nbpm + self.r_qpm <= 0.0 {
            return Err(invalid("state.r_nbpm and state.r_qpm cannot both be zero"));
        }
        finite("state.phase_rad", self.phase_rad)?;
        fraction("state.white_noise", self.white_noise)
    }
}

impl CountsConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        nonneg("counts.pair_rate", self.pair_rate)?;
        nonneg("counts.singles_s", self.singles_s)?;
        nonneg("counts.singles_i", self.singles_i)?;
        nonneg("counts.window_s", self.window_s)?;
        positive("counts.integration_time_s", self.integration_time_s)
    }
}

impl FringesConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.signal_angles_deg.is_empty() {
            return Err(invalid("fringes.signal_angles_deg is empty"));
        }
        for &a in &self.signal_angles_deg {
            finite("fringes.signal_angles_deg entry", a)?;
        }
        finite("fringes.idler_start_deg", self.idler_start_deg)?;
        finite("fringes.idler_stop_deg", self.idler_stop_deg)?;
        positive("fringes.idler_step_deg", self.idler_step_deg)?;
        let n = self.idler_angles().len();
        if !(self.idler_stop_deg > self.idler_start_deg) || !(ppktp::countstats::MIN_FRINGE_POINTS..=100_000).contains(&n) {
            return Err(invalid(format!(
                "fringe scan needs between {} and 100000 idler angles",
                ppktp::countstats::MIN_FRINGE_POINTS
            )));
        }
        Ok(())
    }
}

impl ChshConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let a = self.angles;
        for v in [a.signal_deg, a.signal_prime_deg, a.idler_deg, a.idler_prime_deg] {
            finite("chsh angle", v)?;
        }
        Ok(())
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        for r in &self.records {
            for (name, v) in [
                ("singles_s", r.singles_s),
                ("singles_i", r.singles_i),
                ("coincidences", r.coincidences),
                ("window_s", r.window_s),
            ] {
                nonneg(&format!("stats record {:?} {name}", r.label), v)?;
            }
            if let Some(p) = r.pump_power_mw {
                positive("pump_power_mw", p)?;
            }
            if let Some(b) = r.bandwidth_nm {
                positive("bandwidth_nm", b)?;
            }
            if let Some(d) = r.dead_time_s {
                nonneg("dead_time_s", d)?;
            }
            if let Some(t) = &r.threefold {
                nonneg("r_si", t.r_si)?;
                nonneg("r_si_prime", t.r_si_prime)?;
                nonneg("r_sii_prime", t.r_sii_prime)?;
            }
        }
        if let Some(s) = &self.source {
            nonneg("source.pair_rate", s.pair_rate)?;
            fraction("source.efficiency_s", s.efficiency_s)?;
            fraction("source.efficiency_i", s.efficiency_i)?;
            nonneg("source.background_s", s.background_s)?;
            nonneg("source.background_i", s.background_i)?;
            positive("source.window_s", s.window_s)?;
            positive("source.integration_time_s", s.integration_time_s)?;
            let events = (s.pair_rate + s.background_s + s.background_i) * s.integration_time_s;
            if events > 1e9 {
                return Err(invalid(format!("source simulation would visit {events:.3e} events (limit 1e9)")));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    /// Checks every section, whichever subcommand runs, so a bad value never
    /// sits unnoticed in a config that is reused later.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.design.validate()?;
        if self.dutycycle.order < 1 {
            return Err(invalid(format!("dutycycle.order = {} must be ≥ 1", self.dutycycle.order)));
        }
        self.montecarlo.validate()?;
        self.jspd.validate()?;
        self.state.validate()?;
        self.counts.validate()?;
        self.fringes.validate()?;
        self.chsh.validate()?;
        self.stats.validate()
    }
}
