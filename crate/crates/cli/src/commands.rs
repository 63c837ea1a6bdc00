//! One function per subcommand; each writes its files into `out` and
//! returns the values echoed in the stdout summary.

use std::path::{Path, PathBuf};

use chipgyro_core::guide::{
    characterize_guide, modulated_roughness_average, potential_map, roughness_potential,
    CorrugationModel, CurrentWaveform, SearchBox,
};
use chipgyro_core::interferometer::{
    corner_frequencies, sensitivity_report, transfer_power, InterferometerConfig,
};
use chipgyro_core::noise::{
    acceleration_phase_variance_with, phase_sigma_to_rotation_sigma, phase_variance_with,
    rotation_phase_variance_with, Band, NoiseDomain, PsdModel, VarianceOptions,
};
use chipgyro_core::stability::{
    dick_sum_allan, dick_sum_curve, feasibility_boundary, phenomenon_rates, projection_allan_curve,
    AllanCurve, Assumptions, WhiteAllanLaw,
};
use chipgyro_core::units::YEAR;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::output::{linear_grid, log_grid, write_csv, write_json, CsvTable};

pub struct Report {
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn guide(loaded: &Loaded, out: &Path) -> CliResult<Report> {
    let cfg = &loaded.config;
    let species = cfg.species()?;
    let geometry = cfg.geometry()?;
    cfg.validate_run("guide")?;
    let b0 = cfg.geometry.offset_b0_t;
    let run = &cfg.run.guide;

    let ch = characterize_guide(&geometry, &species, b0)?;
    let search = SearchBox::for_geometry(&geometry);
    let map = potential_map(&geometry, &search, run.map_n_rho, run.map_n_z, &species, b0)?;

    let roughness = match &run.roughness {
        None => Value::Null,
        Some(r) => {
            let circumference = 2.0 * std::f64::consts::PI * ch.min_position.0;
            let height = ch.min_position.1 - geometry.height();
            let corr = CorrugationModel::generate(
                r.amplitude_m,
                r.correlation_length_m,
                cfg.run.seed,
                circumference,
                r.n_points,
                height,
            )?;
            let peak = geometry
                .loops
                .iter()
                .fold(0.0_f64, |m, l| m.max(l.current.abs()));
            let dc = roughness_potential(&corr, peak, &species)?;
            let waveform = match r.waveform.as_str() {
                "square" => CurrentWaveform::Square {
                    amplitude: peak,
                    offset: 0.0,
                },
                _ => CurrentWaveform::Sine {
                    amplitude: peak,
                    offset: 0.0,
                },
            };
            let ac = modulated_roughness_average(&corr, &waveform, &species, r.n_time)?;
            json!({
                "seed": cfg.run.seed,
                "amplitude_m": r.amplitude_m,
                "correlation_length_m": r.correlation_length_m,
                "smoothing_length_m": height,
                "waveform": r.waveform,
                "dc_rms_potential_j": rms(&dc),
                "modulated_rms_potential_j": rms(&ac.potential),
                "suppressed": ac.suppressed,
            })
        }
    };

    let json_path = out.join("guide_characterization.json");
    let map_path = out.join("potential_map.csv");
    write_json(
        &json_path,
        &json!({
            "characterization": ch,
            "height_above_wires_m": ch.min_position.1 - geometry.height(),
            "roughness": roughness,
            "assumptions": {
                "species": species,
                "geometry": geometry,
                "offset_b0_t": b0,
                "potential": "U = mu * sqrt(|B|^2 + B0^2)",
            },
        }),
    )?;

    let mut table = CsvTable::new(&["rho_m", "z_m", "potential_j"]);
    table
        .comment("offset_b0_t", b0)
        .comment("magnetic_moment_j_per_t", species.magnetic_moment)
        .comment("geometry", &geometry.label);
    for (rho, z, u) in &map {
        table.row(&[*rho, *z, *u]);
    }
    write_csv(&map_path, &table)?;

    Ok(Report {
        outputs: vec![json_path, map_path],
        summary: json!({
            "rho0_m": ch.min_position.0,
            "z0_m": ch.min_position.1,
            "radial_frequency_hz": ch.radial_frequency,
            "depth_temperature_k": ch.depth_temperature,
        }),
    })
}

fn interferometer_comments(table: &mut CsvTable, c: &InterferometerConfig) {
    table
        .comment("pulse_duration_s", c.pulse_duration)
        .comment("interrogation_time_s", c.interrogation_time)
        .comment("guide_radius_m", c.guide_radius)
        .comment("n_loops", c.n_loops)
        .comment("launch_over_recoil", c.launch_over_recoil())
        .comment("sin_latitude", c.latitude.sin())
        .comment("atom_number", c.atom_number)
        .comment("contrast", c.contrast)
        .comment("squeezing", c.squeezing)
        .comment("dead_time_s", c.dead_time);
}

pub fn transfer(loaded: &Loaded, out: &Path) -> CliResult<Report> {
    let cfg = &loaded.config;
    let ic = cfg.interferometer()?;
    cfg.validate_run("transfer")?;
    let t = &cfg.run.transfer;
    let (hp, lp) = corner_frequencies(&ic);

    let mut table = CsvTable::new(&["f_hz", "abs_h", "abs_h_sq"]);
    interferometer_comments(&mut table, &ic);
    table.comment("f_hp_hz", hp).comment("f_lp_hz", lp);
    for f in log_grid(t.f_min_hz, t.f_max_hz, t.points) {
        let p = transfer_power(f, &ic);
        table.row(&[f, p.sqrt(), p]);
    }
    let path = out.join("transfer.csv");
    write_csv(&path, &table)?;
    Ok(Report {
        outputs: vec![path],
        summary: json!({ "f_hp_hz": hp, "f_lp_hz": lp, "points": t.points }),
    })
}

pub fn sensitivity(loaded: &Loaded, out: &Path) -> CliResult<Report> {
    let cfg = &loaded.config;
    let base = cfg.interferometer()?;
    cfg.validate_run("sensitivity")?;
    let s = &cfg.run.sensitivity;

    let mut table = CsvTable::new(&[
        "atom_number",
        "two_t_s",
        "guide_radius_m",
        "delta_omega_rad_s",
        "delta_omega_rad_s_sqrt_hz",
        "arw_deg_sqrt_h",
        "arw_cycle_deg_sqrt_h",
    ]);
    interferometer_comments(&mut table, &base);
    table
        .comment(
            "delta_omega_rad_s",
            "per-shot xi*sqrt(2/N)/(eta*dPhi/dOmega)",
        )
        .comment("arw_deg_sqrt_h", "per-shot value read as rad s^-1 Hz^-1/2")
        .comment(
            "arw_cycle_deg_sqrt_h",
            "per-shot value times sqrt(cycle time)",
        );
    let grid = log_grid(s.two_t_min_s, s.two_t_max_s, s.points);
    for &n in &s.atom_numbers {
        for &two_t in &grid {
            let ic = InterferometerConfig::from_interrogation_time(
                base.species.clone(),
                base.pulse_duration,
                two_t,
                base.n_loops,
                base.launch_speed,
            )?;
            let ic = InterferometerConfig {
                atom_number: n,
                ..copy_knobs(&base, ic)
            };
            let r = sensitivity_report(&ic)?;
            table.row(&[
                n,
                two_t,
                ic.guide_radius,
                r.per_shot,
                r.per_root_hz,
                r.arw_per_shot_reading,
                r.arw,
            ]);
        }
    }
    let path = out.join("sensitivity.csv");
    write_csv(&path, &table)?;
    let at_config = sensitivity_report(&base)?;
    Ok(Report {
        outputs: vec![path],
        summary: json!({
            "interrogation_time_s": base.interrogation_time,
            "delta_omega_rad_s": at_config.per_shot,
            "arw_deg_sqrt_h": at_config.arw_per_shot_reading,
        }),
    })
}

/// Carries contrast, latitude, squeezing, dead time and N from `from` onto `to`.
fn copy_knobs(from: &InterferometerConfig, to: InterferometerConfig) -> InterferometerConfig {
    InterferometerConfig {
        atom_number: from.atom_number,
        contrast: from.contrast,
        latitude: from.latitude,
        squeezing: from.squeezing,
        dead_time: from.dead_time,
        ..to
    }
}

#[derive(Serialize)]
struct AllanMeta<'a> {
    model: &'a str,
    assumptions: &'a Assumptions,
    white_coefficient_rad_s_sqrt_s: Option<f64>,
    sigma_1_s_rad_s: Option<f64>,
    sigma_year_rad_s: Option<f64>,
    year_s: f64,
    m_max: Option<u64>,
    dick_converged: Option<bool>,
    dick_tail_bound_rad2_s2: Option<f64>,
    noise: Option<&'a PsdModel>,
}

pub fn allan(loaded: &Loaded, out: &Path) -> CliResult<Report> {
    let cfg = &loaded.config;
    let ic = cfg.interferometer()?;
    cfg.validate_run("allan")?;
    let a = &cfg.run.allan;
    let tau_min = a.tau_min_s.unwrap_or(ic.cycle_time());
    if tau_min >= a.tau_max_s {
        return Err(CliError::config(format!(
            "run.allan.tau_max_s: must exceed the first averaging time {tau_min} s"
        )));
    }
    let taus = log_grid(tau_min, a.tau_max_s, a.points);

    let (curve, meta_extra): (AllanCurve, _) = match a.model.as_str() {
        "dick_sum" => {
            let psd = cfg.psd(&loaded.base_dir)?;
            if psd.domain != NoiseDomain::Rotation {
                return Err(CliError::config(
                    "noise.domain: the dick_sum model needs a rotation PSD",
                ));
            }
            let curve = dick_sum_curve(&psd, &ic, &taus, a.m_max)?;
            let probe = dick_sum_allan(&psd, &ic, taus[0], a.m_max)?;
            (
                curve,
                (
                    None,
                    Some(probe.converged),
                    Some(probe.tail_bound),
                    Some(psd.model),
                ),
            )
        }
        _ => {
            let law = WhiteAllanLaw::projection(&ic)?;
            (
                projection_allan_curve(&ic, &taus)?,
                (Some(law), None, None, None),
            )
        }
    };
    let (law, converged, tail, noise_model) = meta_extra;

    let mut table = CsvTable::new(&["tau_s", "sigma_rad_s"]);
    interferometer_comments(&mut table, &ic);
    table.comment("model", &a.model);
    for &(t, s) in &curve.points {
        table.row(&[t, s]);
    }
    let csv_path = out.join("allan.csv");
    let json_path = out.join("allan_assumptions.json");
    write_csv(&csv_path, &table)?;
    let meta = AllanMeta {
        model: &a.model,
        assumptions: &curve.assumptions,
        white_coefficient_rad_s_sqrt_s: law.map(|l| l.coefficient),
        sigma_1_s_rad_s: law.map(|l| l.at(1.0)),
        sigma_year_rad_s: law.map(|l| l.at(YEAR)),
        year_s: YEAR,
        m_max: (a.model == "dick_sum").then_some(a.m_max),
        dick_converged: converged,
        dick_tail_bound_rad2_s2: tail,
        noise: noise_model.as_ref(),
    };
    write_json(&json_path, &meta)?;
    Ok(Report {
        outputs: vec![csv_path, json_path],
        summary: json!({
            "model": a.model,
            "white_coefficient_rad_s_sqrt_s": meta.white_coefficient_rad_s_sqrt_s,
            "sigma_year_rad_s": meta.sigma_year_rad_s,
            "last_sigma_rad_s": curve.points.last().map(|p| p.1),
        }),
    })
}

pub fn mission(loaded: &Loaded, out: &Path) -> CliResult<Report> {
    let cfg = &loaded.config;
    let template = cfg.interferometer()?;
    cfg.validate_run("mission")?;
    let m = &cfg.run.mission;
    let vr = template.species.recoil_velocity;
    let ratios = linear_grid(m.v_min_over_vr, m.v_max_over_vr, m.points);
    let speeds: Vec<f64> = ratios.iter().map(|r| r * vr).collect();
    let boundary = feasibility_boundary(
        m.target_sigma_rad_s,
        m.integration_time_s,
        &speeds,
        &template,
        m.rel_tol,
    )?;

    let mut table = CsvTable::new(&["v_over_vr", "min_2t_s", "r_m"]);
    interferometer_comments(&mut table, &template);
    table
        .comment("target_sigma_rad_s", m.target_sigma_rad_s)
        .comment("integration_time_s", m.integration_time_s)
        .comment("model", "projection");
    for (ratio, &(_, two_t, r)) in ratios.iter().zip(&boundary.points) {
        table.row(&[*ratio, two_t, r]);
    }
    let csv_path = out.join("mission.csv");
    let json_path = out.join("mission_assumptions.json");
    write_csv(&csv_path, &table)?;
    write_json(
        &json_path,
        &json!({
            "model": "projection",
            "target_sigma_rad_s": boundary.target_sigma,
            "integration_time_s": boundary.integration_time,
            "rel_tol": m.rel_tol,
            "assumptions": boundary.assumptions,
        }),
    )?;

    let nearest = ratios
        .iter()
        .zip(&boundary.points)
        .min_by(|a, b| (a.0 - 4.0).abs().total_cmp(&(b.0 - 4.0).abs()))
        .map(|(r, p)| json!({ "v_over_vr": r, "min_2t_s": p.1, "r_m": p.2 }));
    Ok(Report {
        outputs: vec![csv_path, json_path],
        summary: json!({ "nearest_4vr": nearest, "points": boundary.points.len() }),
    })
}

pub fn noise(loaded: &Loaded, out: &Path) -> CliResult<Report> {
    let cfg = &loaded.config;
    let ic = cfg.interferometer()?;
    let psd = cfg.psd(&loaded.base_dir)?;
    let n = &cfg.noise;
    let default = Band::default_for(&ic);
    let band = Band {
        f_min: n.f_min_hz.unwrap_or(default.f_min),
        f_max: n.f_max_hz.unwrap_or(default.f_max),
    };
    if band.f_min >= band.f_max {
        return Err(CliError::config(
            "noise.f_min_hz: must be below the upper band edge",
        ));
    }
    let opts = VarianceOptions {
        band: Some(band),
        rel_tol: n.rel_tol,
    };
    let k = ic.effective_wavevector();
    let v = match psd.domain {
        NoiseDomain::Phase => phase_variance_with(&psd, &ic, &opts)?,
        NoiseDomain::Acceleration => acceleration_phase_variance_with(&psd, &ic, k, &opts)?,
        NoiseDomain::Rotation => {
            rotation_phase_variance_with(&psd, &ic, k, ic.guide_radius, &opts)?
        }
    };
    let sigma = v.value.sqrt();
    let rotation_sigma = phase_sigma_to_rotation_sigma(sigma, &ic)?;

    let path = out.join("noise_budget.json");
    write_json(
        &path,
        &json!({
            "domain": psd.domain,
            "source": match &n.file { Some(f) => json!({ "file": f }), None => json!({ "model": psd.model }) },
            "band_hz": [v.band.f_min, v.band.f_max],
            "convention": v.convention,
            "budget": {
                "phase_variance_rad2": v.value,
                "phase_sigma_rad": sigma,
                "rotation_sigma_rad_s": rotation_sigma,
                "error_estimate_rad2": v.error_estimate,
                "infrared_share": v.infrared_share,
            },
            "evaluations": v.evaluations,
            "assumptions": Assumptions::of(&ic),
        }),
    )?;
    Ok(Report {
        outputs: vec![path],
        summary: json!({
            "phase_sigma_rad": sigma,
            "rotation_sigma_rad_s": rotation_sigma,
            "infrared_share": v.infrared_share,
        }),
    })
}

pub fn rates(_loaded: &Loaded, out: &Path) -> CliResult<Report> {
    let rates = phenomenon_rates();
    let mut table = CsvTable::new(&["name", "rate_rad_s", "rate_relative_to_earth"]);
    table
        .comment("year_s", YEAR)
        .comment("angle_convention", "1 mas = 4.848e-9 rad (angle)");
    for r in &rates {
        table.text_row(vec![
            r.name.clone(),
            crate::output::fmt_f64(r.rate),
            crate::output::fmt_f64(r.rate_relative_to_earth),
        ]);
    }
    let path = out.join("rates.csv");
    write_csv(&path, &table)?;
    Ok(Report {
        outputs: vec![path],
        summary: json!({ "entries": rates.len() }),
    })
}
