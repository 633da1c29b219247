//! Subcommand implementations. Each returns the files it would write and a
//! short human-readable summary; nothing touches the disk here.

use ppktp::biphoton::{
    concurrence, fidelity, overcomplete_settings, reconstruct_with, standard_settings, state_from_efficiencies,
    DensityMatrix, MatrixJson, MleOptions, PolarizationState, Projector, ProjectorSetting, SettingCounts,
};
use ppktp::countstats::{
    accidental_rate, alpha_2d, alpha_2d_std_error, alpha_3d, brightness, chsh_from_counts, chsh_settings,
    dead_time_corrected, simulate_counts, simulate_source, subtract_accidentals, visibility, CountRecord,
    FringePoint, SimulationParams, SourceModel, Threefold,
};
use ppktp::dispersion::{Crystal, DispersionTable};
use ppktp::phasematch::{PhaseMatchError, PhaseMatcher, ProcessSpec};
use ppktp::poling::{
    efficiency_penalty, efficiency_ratio, monte_carlo_efficiency, solve_balanced_duty_cycle, EfficiencyTable,
    MonteCarloConfig, OrderingPolicy,
};
use ppktp::spectrum::{joint_spectral_density, marginal_spectrum, AxisSpec, Spectrum, SpectrumAxis};
use ppktp::biphoton::entanglement_vs_fabrication;
use serde_json::{json, Value};

use crate::config::{Noise, RunConfig, SettingSet, StateConfig};
use crate::error::{invalid, CliError};
use crate::output::{Cell, Format, Output, Table};

pub struct Run {
    pub output: Output,
    pub summary: String,
}

pub fn load_dispersion(cfg: &RunConfig) -> Result<DispersionTable, CliError> {
    Ok(match &cfg.dispersion.path {
        Some(p) => DispersionTable::from_path(p)?,
        None => DispersionTable::bundled(),
    })
}

fn ktp(table: &DispersionTable) -> Result<PhaseMatcher, CliError> {
    Ok(PhaseMatcher::new(table.crystal(Crystal::Ktp)?))
}

pub fn design(cfg: &RunConfig, table: &DispersionTable, format: Format) -> Result<Run, CliError> {
    let d = &cfg.design;
    let matcher = ktp(table)?;
    let pumps = d.pumps();

    let mut periods = Table::new(&["pump_nm", "period_mm", "grating_vector_rad_per_um", "branch"]);
    let mut wavelengths = Table::new(&["pump_nm", "signal_nm", "idler_nm", "branch"]);
    for r in matcher.design_sweep(&pumps, d.temperature_c)? {
        periods.push(vec![r.pump_nm.into(), r.period_mm.into(), r.grating_vector.into(), r.branch.as_str().into()]);
        wavelengths.push(vec![r.pump_nm.into(), r.signal_nm.into(), r.idler_nm.into(), r.branch.as_str().into()]);
    }

    let mut fixed = Table::new(&["pump_nm", "process", "signal_nm", "idler_nm", "branch"]);
    for r in matcher.fixed_period_sweep(&pumps, d.period_mm, d.temperature_c)? {
        let n = r.nbpm;
        fixed.push(vec![r.pump_nm.into(), "nbpm".into(), n.signal_nm.into(), n.idler_nm.into(), n.branch().as_str().into()]);
        if let Some(q) = r.qpm {
            fixed.push(vec![r.pump_nm.into(), "qpm".into(), q.signal_nm.into(), q.idler_nm.into(), q.branch().as_str().into()]);
        }
    }

    let (point, summary) = match matcher.pump_for_period(d.period_mm, d.temperature_c, d.pump_start_nm, d.pump_stop_nm) {
        Ok(c) => (
            json!({
                "period_mm": d.period_mm,
                "temperature_c": d.temperature_c,
                "pump_nm": c.point.pump_nm,
                "signal_nm": c.point.signal_nm,
                "idler_nm": c.point.idler_nm,
                "grating_vector_rad_per_um": c.grating_vector,
                "qpm_order": c.qpm_order,
            }),
            format!(
                "design point for {} mm: pump {:.3} nm, signal {:.3} nm, idler {:.3} nm",
                d.period_mm, c.point.pump_nm, c.point.signal_nm, c.point.idler_nm
            ),
        ),
        Err(PhaseMatchError::NoRoot { .. }) => (
            Value::Null,
            format!("no coexistence point for {} mm in the pump range", d.period_mm),
        ),
        Err(e) => return Err(e.into()),
    };

    let mut out = Output::new(format);
    out.table("fig1a_periods", &periods)?;
    out.table("fig1b_wavelengths", &wavelengths)?;
    out.table("fig1c_fixed_period", &fixed)?;
    out.json("design_point.json", &point)?;
    Ok(Run { output: out, summary })
}

pub fn dutycycle(cfg: &RunConfig, format: Format) -> Result<Run, CliError> {
    let m = cfg.dutycycle.order;
    if m < 1 {
        return Err(invalid(format!("QPM order {m} must be ≥ 1")));
    }
    let duty = solve_balanced_duty_cycle(m)?;
    let penalty = efficiency_penalty(duty)?;
    let (r0, rm) = efficiency_ratio(duty, m)?;
    let report = json!({
        "qpm_order": m,
        "duty_cycle": duty,
        "penalty_factor": penalty,
        "r0": r0,
        "rm": rm,
        "r0_minus_rm": r0 - rm,
    });
    let summary = format!("m = {m}: D = {duty:.6}, penalty 1/sin²(πD) = {penalty:.5}, R0 = {r0:.6}, R{m} = {rm:.6}");
    let mut out = Output::new(format);
    out.json("dutycycle.json", &report)?;
    Ok(Run { output: out, summary })
}

fn efficiency_rows(t: &mut Table, label: &str, table: &EfficiencyTable) {
    for r in &table.rows {
        t.push(vec![
            label.into(),
            table.period_mm.into(),
            (table.num_domains as i64).into(),
            r.sigma_um.into(),
            r.mean.into(),
            r.std.into(),
            r.nbpm.into(),
        ]);
    }
}

pub fn montecarlo(cfg: &RunConfig, format: Format) -> Result<Run, CliError> {
    let mc = &cfg.montecarlo;
    let duty = match mc.duty_cycle {
        Some(d) => d,
        None => solve_balanced_duty_cycle(mc.qpm_order)?,
    };
    let main = MonteCarloConfig {
        qpm_order: mc.qpm_order,
        truncation_sigmas: mc.truncation_sigmas,
        ordering: mc.ordering,
        ..MonteCarloConfig::new(mc.period_mm, duty, mc.num_domains, mc.sigma_grid_um.clone(), mc.samples, cfg.seed)
    };
    main.validate()?;
    let comparisons: Vec<(String, MonteCarloConfig)> = mc
        .comparisons
        .iter()
        .map(|c| {
            let m = MonteCarloConfig {
                truncation_sigmas: mc.truncation_sigmas,
                ordering: OrderingPolicy::Allow,
                ..MonteCarloConfig::new(c.period_mm, c.duty_cycle, c.num_domains, mc.sigma_grid_um.clone(), mc.samples, cfg.seed)
            };
            m.validate().map(|_| (c.label.clone(), m))
        })
        .collect::<Result<_, _>>()?;

    let eff = monte_carlo_efficiency(&main)?;
    let ent = entanglement_vs_fabrication(&main)?;

    let mut fig2a = Table::new(&[
        "grating",
        "period_mm",
        "num_domains",
        "sigma_um",
        "mean_efficiency",
        "std_efficiency",
        "nbpm_efficiency",
    ]);
    efficiency_rows(&mut fig2a, "design", &eff);
    for (label, c) in &comparisons {
        efficiency_rows(&mut fig2a, label, &monte_carlo_efficiency(c)?);
    }

    let mut fig2b = Table::new(&["sigma_um", "mean_concurrence", "std_concurrence", "mean_fidelity", "std_fidelity"]);
    for r in &ent.rows {
        fig2b.push(vec![
            r.sigma_um.into(),
            r.mean_concurrence.into(),
            r.std_concurrence.into(),
            r.mean_fidelity.into(),
            r.std_fidelity.into(),
        ]);
    }

    let last = eff.rows.last().expect("σ grid is non-empty");
    let summary = format!(
        "D = {duty:.6}, {} samples; at σ = {} µm mean η = {:.4}, C = {:.5}, F = {:.5}",
        mc.samples,
        last.sigma_um,
        last.mean,
        ent.rows.last().map_or(f64::NAN, |r| r.mean_concurrence),
        ent.rows.last().map_or(f64::NAN, |r| r.mean_fidelity),
    );
    let mut out = Output::new(format);
    out.table("fig2a_efficiency", &fig2a)?;
    out.table("fig2b_entanglement", &fig2b)?;
    out.json(
        "montecarlo_summary.json",
        &json!({ "duty_cycle": duty, "qpm_order": mc.qpm_order, "samples": mc.samples, "seed": cfg.seed }),
    )?;
    Ok(Run { output: out, summary })
}

fn spectrum_table(s: &Spectrum) -> Table {
    let mut t = Table::new(&["wavelength_nm", "intensity"]);
    for (&w, &v) in s.wavelength_nm.iter().zip(&s.values) {
        t.push(vec![w.into(), v.into()]);
    }
    t
}

pub fn jspd(cfg: &RunConfig, table: &DispersionTable, format: Format) -> Result<Run, CliError> {
    let j = &cfg.jspd;
    let matcher = ktp(table)?;
    let spec = ProcessSpec::nbpm(j.temperature_c);
    let point = matcher.solve_nbpm(&spec, j.pump_nm)?;
    let axis = |center_nm| AxisSpec {
        center_nm,
        half_width_nm: j.half_width_nm,
        step_nm: j.step_nm,
    };
    let signal_axis = axis(point.signal_nm).points()?;
    let idler_axis = axis(point.idler_nm).points()?;
    let grid = joint_spectral_density(
        &matcher,
        &spec,
        j.pump_nm,
        &signal_axis,
        &idler_axis,
        j.length_mm,
        None,
        j.filter.as_ref(),
    )?;
    let ms = marginal_spectrum(&grid, SpectrumAxis::Signal);
    let mi = marginal_spectrum(&grid, SpectrumAxis::Idler);
    let (peak_s, peak_i) = grid.peak_location();

    let mut out = Output::new(format);
    match format {
        Format::Csv => {
            // first row holds the idler axis, first column the signal axis
            let mut columns = vec!["signal_nm\\idler_nm".to_string()];
            columns.extend(grid.idler_nm.iter().map(|w| format!("{w}")));
            let rows = grid
                .signal_nm
                .iter()
                .zip(&grid.values)
                .map(|(&s, row)| std::iter::once(Cell::Num(s)).chain(row.iter().map(|&v| Cell::Num(v))).collect())
                .collect();
            out.table("jspd_matrix", &Table { columns, rows })?;
        }
        Format::Json => out.json("jspd_matrix.json", &grid)?,
    }
    out.table("marginal_signal", &spectrum_table(&ms))?;
    out.table("marginal_idler", &spectrum_table(&mi))?;
    out.json(
        "jspd_summary.json",
        &json!({
            "pump_nm": j.pump_nm,
            "temperature_c": j.temperature_c,
            "length_mm": j.length_mm,
            "filter": j.filter,
            "phase_matched_signal_nm": point.signal_nm,
            "phase_matched_idler_nm": point.idler_nm,
            "peak_signal_nm": peak_s,
            "peak_idler_nm": peak_i,
            "signal_fwhm_nm": ms.fwhm(),
            "idler_fwhm_nm": mi.fwhm(),
        }),
    )?;
    let fmt_width = |w: Option<f64>| w.map_or("n/a".to_string(), |v| format!("{v:.3} nm"));
    let summary = format!(
        "JSPD peak at ({peak_s:.3}, {peak_i:.3}) nm; marginal FWHM signal {}, idler {}",
        fmt_width(ms.fwhm()),
        fmt_width(mi.fwhm())
    );
    Ok(Run { output: out, summary })
}

pub fn source_state(s: &StateConfig) -> Result<DensityMatrix, CliError> {
    let pure = DensityMatrix::from_pure(&state_from_efficiencies(s.r_nbpm, s.r_qpm, s.phase_rad)?);
    Ok(pure.with_white_noise(1.0 - s.white_noise)?)
}

fn simulation_params(cfg: &RunConfig) -> SimulationParams {
    let c = &cfg.counts;
    SimulationParams {
        pair_rate: c.pair_rate,
        singles_s: c.singles_s,
        singles_i: c.singles_i,
        window_s: c.window_s,
        integration_time_s: c.integration_time_s,
        seed: cfg.seed,
    }
}

/// Simulated counts, or their expectation when noise is off.
fn counts_for(
    rho: &DensityMatrix,
    settings: &[ProjectorSetting],
    params: &SimulationParams,
    noise: Noise,
) -> Result<Vec<SettingCounts>, CliError> {
    params.validate()?;
    Ok(match noise {
        Noise::Poisson => simulate_counts(rho, settings, params)?,
        Noise::None => settings
            .iter()
            .map(|s| {
                let p = rho.expectation(&s.ket()).max(0.0);
                SettingCounts::new(s, params.expected_counts(p), params.integration_time_s, params.accidental_counts())
            })
            .collect(),
    })
}

pub fn fringes(cfg: &RunConfig, format: Format) -> Result<Run, CliError> {
    let f = &cfg.fringes;
    let rho = source_state(&cfg.state)?;
    let params = simulation_params(cfg);
    let idler = f.idler_angles();
    // one simulation over all fringes so every setting draws its own stream
    let settings: Vec<ProjectorSetting> = f
        .signal_angles_deg
        .iter()
        .flat_map(|&s| idler.iter().map(move |&i| ppktp::biphoton::AnalyzerSetting::new(s, i).into()))
        .collect();
    let counts = counts_for(&rho, &settings, &params, cfg.counts.noise)?;
    let acc = cfg
        .counts
        .subtract_accidentals
        .then_some(params.singles_s * params.singles_i * params.window_s);

    let mut out = Output::new(format);
    let mut fits = Vec::new();
    let mut lines = Vec::new();
    for (&theta_s, chunk) in f.signal_angles_deg.iter().zip(counts.chunks(idler.len())) {
        let points: Vec<FringePoint> = idler
            .iter()
            .zip(chunk)
            .map(|(&theta_deg, c)| FringePoint {
                theta_deg,
                rate: c.coincidences / c.integration_time_s,
            })
            .collect();
        let fit = visibility(&points, acc)?;
        let mut t = Table::new(&["theta_i_deg", "coincidence_rate"]);
        for p in &points {
            t.push(vec![p.theta_deg.into(), p.rate.into()]);
        }
        out.table(&format!("fringe_theta_s_{theta_s}"), &t)?;
        lines.push(format!("θ_s = {theta_s}°: V = {:.4} ± {:.4}", fit.visibility, fit.std_error));
        fits.push(json!({ "theta_s_deg": theta_s, "fit": fit }));
    }
    out.json(
        "fringes_summary.json",
        &json!({ "accidental_rate_subtracted": acc, "fringes": fits }),
    )?;
    Ok(Run {
        output: out,
        summary: lines.join("\n"),
    })
}

pub fn chsh(cfg: &RunConfig, format: Format) -> Result<Run, CliError> {
    let c = &cfg.chsh;
    let rho = source_state(&cfg.state)?;
    let params = simulation_params(cfg);
    let counts = counts_for(&rho, &chsh_settings(&c.angles), &params, cfg.counts.noise)?;
    let est = chsh_from_counts(&counts, c.form, cfg.counts.subtract_accidentals, c.bootstrap, cfg.seed)?;
    let sigmas = if est.std_error > 0.0 { (est.s - 2.0) / est.std_error } else { f64::NAN };
    let mut out = Output::new(format);
    out.json(
        "chsh.json",
        &json!({
            "angles": c.angles,
            "accidentals_subtracted": cfg.counts.subtract_accidentals,
            "estimate": est,
            "violation_std_errors": if sigmas.is_finite() { json!(sigmas) } else { Value::Null },
        }),
    )?;
    out.csv_records("chsh_counts.csv", &counts)?;
    let summary = format!("S = {:.4} ± {:.4} ({:?} form)", est.s, est.std_error, est.form);
    Ok(Run { output: out, summary })
}

pub fn read_counts(path: &std::path::Path) -> Result<Vec<SettingCounts>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Io(format!("{}: {e}", path.display())),
        _ => invalid(format!("{}: {e}", path.display())),
    })?;
    r.deserialize()
        .collect::<Result<Vec<SettingCounts>, _>>()
        .map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn tomography(cfg: &RunConfig, format: Format) -> Result<Run, CliError> {
    let t = &cfg.tomography;
    let (counts, truth) = match &t.counts_path {
        Some(p) => (read_counts(p)?, None),
        None => {
            let settings = match t.settings {
                SettingSet::Standard => standard_settings(),
                SettingSet::Overcomplete => overcomplete_settings(),
            };
            let rho = source_state(&cfg.state)?;
            (counts_for(&rho, &settings, &simulation_params(cfg), cfg.counts.noise)?, Some(rho))
        }
    };
    let data: Vec<SettingCounts> = if cfg.counts.subtract_accidentals {
        counts
            .iter()
            .map(|c| SettingCounts {
                coincidences: c.net_counts(),
                accidentals: 0.0,
                ..c.clone()
            })
            .collect()
    } else {
        counts.clone()
    };
    let rec = reconstruct_with(&data, &MleOptions::default())?;
    let c = concurrence(&rec.rho);
    let f = fidelity(&rec.rho, &PolarizationState::psi_plus());
    // overlap with the input is the fidelity only when the input is pure
    let f_input = match truth {
        Some(_) if cfg.state.white_noise == 0.0 => {
            let s = &cfg.state;
            json!(fidelity(&rec.rho, &state_from_efficiencies(s.r_nbpm, s.r_qpm, s.phase_rad)?))
        }
        _ => Value::Null,
    };
    let mut out = Output::new(format);
    out.json(
        "density_matrix.json",
        &json!({
            "rho": MatrixJson::from(&rec.rho),
            "eigenvalues": rec.rho.eigenvalues(),
            "purity": rec.rho.purity(),
            "concurrence": c,
            "fidelity_psi_plus": f,
            "fidelity_to_input": f_input,
            "log_likelihood": rec.log_likelihood,
            "iterations": rec.iterations,
            "converged": rec.converged,
            "accidentals_subtracted": cfg.counts.subtract_accidentals,
        }),
    )?;
    out.csv_records("tomography_counts.csv", &counts)?;
    let summary = format!(
        "{} settings, C = {c:.5}, F(Ψ⁺) = {f:.5}, {} iterations",
        counts.len(),
        rec.iterations
    );
    Ok(Run { output: out, summary })
}

pub fn stats(cfg: &RunConfig, format: Format) -> Result<Run, CliError> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for r in &cfg.stats.records {
        let mut rec = CountRecord::new(r.singles_s, r.singles_i, r.coincidences, r.window_s);
        rec.threefold = r.threefold.as_ref().map(|t| Threefold {
            r_si: t.r_si,
            r_si_prime: t.r_si_prime,
            r_sii_prime: t.r_sii_prime,
        });
        let a2 = alpha_2d(&rec)?;
        let a3 = rec.threefold.map(|_| alpha_3d(&rec)).transpose()?;
        let b = brightness(&rec, r.pump_power_mw)?;
        let per_nm = match (b.per_mw, r.bandwidth_nm) {
            (Some(p), Some(bw)) => Some(p / bw),
            _ => None,
        };
        let dead = r
            .dead_time_s
            .map(|td| -> Result<Value, CliError> {
                Ok(json!({
                    "dead_time_s": td,
                    "singles_s": dead_time_corrected(r.singles_s, td)?,
                    "singles_i": dead_time_corrected(r.singles_i, td)?,
                }))
            })
            .transpose()?;
        lines.push(format!(
            "{}: α_2d = {a2:.4}, R_sR_i/R_c = {:.4e} s⁻¹{}",
            r.label,
            b.pairs_per_s,
            b.per_mw.map_or(String::new(), |p| format!(" ({p:.4e} s⁻¹ mW⁻¹)"))
        ));
        records.push(json!({
            "label": r.label,
            "record": rec,
            "alpha_2d": a2,
            "alpha_3d": a3,
            "brightness_per_s": b.pairs_per_s,
            "brightness_per_s_per_mw": b.per_mw,
            "brightness_per_s_per_mw_per_nm": per_nm,
            "accidental_rate": accidental_rate(&rec),
            "corrected_coincidences": subtract_accidentals(&rec)?,
            "dead_time": dead,
        }));
    }
    let source = match &cfg.stats.source {
        Some(s) => {
            let model = SourceModel {
                pair_rate: s.pair_rate,
                efficiency_s: s.efficiency_s,
                efficiency_i: s.efficiency_i,
                background_s: s.background_s,
                background_i: s.background_i,
            };
            let rec = simulate_source(&model, s.window_s, s.integration_time_s, cfg.seed)?;
            let a2 = alpha_2d(&rec)?;
            let a3 = alpha_3d(&rec)?;
            lines.push(format!("simulated source: α_2d = {a2:.3}, α_3d = {a3:.4}"));
            json!({
                "model": model,
                "window_s": s.window_s,
                "integration_time_s": s.integration_time_s,
                "record": rec,
                "alpha_2d": a2,
                "alpha_2d_std_error": alpha_2d_std_error(&rec)?,
                "alpha_3d": a3,
            })
        }
        None => Value::Null,
    };
    let mut out = Output::new(format);
    out.json("stats.json", &json!({ "records": records, "source_simulation": source }))?;
    Ok(Run {
        output: out,
        summary: lines.join("\n"),
    })
}
