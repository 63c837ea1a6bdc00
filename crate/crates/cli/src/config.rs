//! TOML run configuration, dot-path overrides and validation.

use std::path::{Path, PathBuf};

use chipgyro_core::interferometer::InterferometerConfig;
use chipgyro_core::magnetostatics::{GuideGeometry, WireLoop};
use chipgyro_core::noise::{NoiseDomain, PowerSpectralDensity};
use chipgyro_core::units::{species_rb87, AtomSpecies, MU_B, YEAR};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_DIR_ENV: &str = "CHIPGYRO_CONFIG_DIR";
pub const DEFAULT_CONFIG_NAME: &str = "chipgyro.toml";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub species: SpeciesBlock,
    #[serde(default)]
    pub geometry: GeometryBlock,
    pub interferometer: Option<InterferometerBlock>,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub run: RunBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesBlock {
    pub name: String,
    pub mass_kg: Option<f64>,
    pub wavelength_m: Option<f64>,
    pub magnetic_moment_j_per_t: Option<f64>,
}

impl Default for SpeciesBlock {
    fn default() -> Self {
        Self {
            name: "Rb87".into(),
            mass_kg: None,
            wavelength_m: None,
            magnetic_moment_j_per_t: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub radius_m: f64,
    pub current_a: f64,
    #[serde(default)]
    pub height_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    /// Defaults to the reference three-wire design.
    pub loops: Option<Vec<LoopSpec>>,
    #[serde(default = "default_b0")]
    pub offset_b0_t: f64,
}

fn default_b0() -> f64 {
    chipgyro_core::guide::DEFAULT_OFFSET_B0
}

impl Default for GeometryBlock {
    fn default() -> Self {
        Self {
            loops: None,
            offset_b0_t: default_b0(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerBlock {
    pub pulse_duration_s: f64,
    pub interrogation_time_s: Option<f64>,
    pub guide_radius_m: Option<f64>,
    pub n_loops: Option<u32>,
    #[serde(default = "default_atom_number")]
    pub atom_number: f64,
    #[serde(default = "one")]
    pub contrast: f64,
    #[serde(default = "default_latitude")]
    pub latitude_deg: f64,
    #[serde(default = "one")]
    pub squeezing: f64,
    #[serde(default)]
    pub dead_time_s: f64,
    #[serde(default = "default_launch")]
    pub launch_speed_over_vr: f64,
}

fn one() -> f64 {
    1.0
}
fn default_atom_number() -> f64 {
    1e4
}
fn default_latitude() -> f64 {
    90.0
}
fn default_launch() -> f64 {
    chipgyro_core::interferometer::DEFAULT_LAUNCH_OVER_VR
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub domain: String,
    #[serde(default)]
    pub white: f64,
    #[serde(default)]
    pub flicker: f64,
    #[serde(default)]
    pub random_walk: f64,
    /// CSV with header `f_hz,psd_value`; relative paths resolve against the config file.
    pub file: Option<PathBuf>,
    pub f_min_hz: Option<f64>,
    pub f_max_hz: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_rel_tol() -> f64 {
    chipgyro_core::noise::DEFAULT_REL_TOL
}

impl Default for NoiseBlock {
    fn default() -> Self {
        Self {
            domain: "phase".into(),
            white: 0.0,
            flicker: 0.0,
            random_walk: 0.0,
            file: None,
            f_min_hz: None,
            f_max_hz: None,
            rel_tol: default_rel_tol(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub guide: GuideRun,
    #[serde(default)]
    pub transfer: TransferRun,
    #[serde(default)]
    pub sensitivity: SensitivityRun,
    #[serde(default)]
    pub allan: AllanRun,
    #[serde(default)]
    pub mission: MissionRun,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuideRun {
    pub map_n_rho: usize,
    pub map_n_z: usize,
    pub roughness: Option<RoughnessRun>,
}

impl Default for GuideRun {
    fn default() -> Self {
        Self {
            map_n_rho: 101,
            map_n_z: 101,
            roughness: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughnessRun {
    pub amplitude_m: f64,
    pub correlation_length_m: f64,
    #[serde(default = "default_roughness_points")]
    pub n_points: usize,
    /// "sine" or "square" modulation of the wire current.
    #[serde(default = "default_waveform")]
    pub waveform: String,
    #[serde(default = "default_n_time")]
    pub n_time: usize,
}

fn default_roughness_points() -> usize {
    4096
}
fn default_waveform() -> String {
    "sine".into()
}
fn default_n_time() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferRun {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
}

impl Default for TransferRun {
    fn default() -> Self {
        Self {
            f_min_hz: 1e-3,
            f_max_hz: 1e5,
            points: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityRun {
    pub two_t_min_s: f64,
    pub two_t_max_s: f64,
    pub points: usize,
    pub atom_numbers: Vec<f64>,
}

impl Default for SensitivityRun {
    fn default() -> Self {
        Self {
            two_t_min_s: 0.1,
            two_t_max_s: 10.0,
            points: 101,
            atom_numbers: vec![1e4, 1e5],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllanRun {
    /// Defaults to one cycle.
    pub tau_min_s: Option<f64>,
    pub tau_max_s: f64,
    pub points: usize,
    /// "projection" or "dick_sum".
    pub model: String,
    pub m_max: u64,
}

impl Default for AllanRun {
    fn default() -> Self {
        Self {
            tau_min_s: None,
            tau_max_s: YEAR,
            points: 61,
            model: "projection".into(),
            m_max: 100_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionRun {
    pub target_sigma_rad_s: f64,
    pub integration_time_s: f64,
    pub v_min_over_vr: f64,
    pub v_max_over_vr: f64,
    pub points: usize,
    pub rel_tol: f64,
}

impl Default for MissionRun {
    fn default() -> Self {
        Self {
            target_sigma_rad_s: chipgyro_core::stability::GEODETIC_TARGET,
            integration_time_s: YEAR,
            v_min_over_vr: 1.0,
            v_max_over_vr: 12.0,
            points: 45,
            rel_tol: 1e-6,
        }
    }
}

/// Locates the config file: an explicit path as given (falling back to the
/// config directory for bare relative names), otherwise the default file in
/// the config directory.
pub fn resolve_config_path(explicit: Option<&Path>, config_dir: Option<&Path>) -> Option<PathBuf> {
    match explicit {
        Some(p) if p.exists() || p.is_absolute() => Some(p.to_path_buf()),
        Some(p) => Some(
            config_dir
                .map(|d| d.join(p))
                .filter(|c| c.exists())
                .unwrap_or_else(|| p.to_path_buf()),
        ),
        None => config_dir
            .map(|d| d.join(DEFAULT_CONFIG_NAME))
            .filter(|p| p.exists()),
    }
}

/// Loaded configuration plus the directory used to resolve relative paths.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Loaded> {
    let (mut table, base_dir) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let table: toml::Table =
                text.parse().map_err(|e: toml::de::Error| CliError::Parse {
                    path: p.to_path_buf(),
                    message: e.to_string(),
                })?;
            let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (table, dir)
        }
        None => (toml::Table::new(), PathBuf::from(".")),
    };
    let mut errors = Vec::new();
    for o in overrides {
        if let Err(e) = apply_override(&mut table, o) {
            errors.push(e);
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config(e.message().to_string()))?;
    Ok(Loaded { config, base_dir })
}

/// `a.b.c=value`; the value is read as a TOML literal, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), String> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}`: expected key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(format!("override `{spec}`: empty key segment"));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let mut cursor = table;
    for key in &keys[..keys.len() - 1] {
        let entry = cursor
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| format!("override `{spec}`: `{key}` is not a table"))?;
    }
    cursor.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

struct Checker(Vec<String>);

impl Checker {
    fn positive(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.0
                .push(format!("{path}: must be finite and > 0 (got {v})"));
        }
    }

    fn non_negative(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.0
                .push(format!("{path}: must be finite and >= 0 (got {v})"));
        }
    }

    fn unit_interval(&mut self, path: &str, v: f64) {
        if !(v > 0.0 && v <= 1.0) {
            self.0.push(format!("{path}: must lie in (0, 1] (got {v})"));
        }
    }

    fn ordered(&mut self, lo_path: &str, lo: f64, hi_path: &str, hi: f64) {
        if lo.is_finite() && hi.is_finite() && lo >= hi {
            self.0
                .push(format!("{lo_path}: must be below {hi_path} ({lo} >= {hi})"));
        }
    }

    fn points(&mut self, path: &str, n: usize, min: usize) {
        if n < min {
            self.0
                .push(format!("{path}: need at least {min} points (got {n})"));
        }
    }

    fn push(&mut self, msg: String) {
        self.0.push(msg);
    }

    fn finish(self) -> CliResult<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(self.0))
        }
    }
}

impl RunConfig {
    pub fn species(&self) -> CliResult<AtomSpecies> {
        let s = &self.species;
        match (s.mass_kg, s.wavelength_m, s.magnetic_moment_j_per_t) {
            (None, None, None) => match s.name.to_ascii_lowercase().as_str() {
                "rb87" | "87rb" | "rubidium-87" => Ok(species_rb87()),
                other => Err(CliError::config(format!(
                    "species.name: unknown species `{other}`; give mass_kg, wavelength_m and magnetic_moment_j_per_t"
                ))),
            },
            (Some(m), Some(l), mu) => Ok(AtomSpecies::new(s.name.clone(), m, l, mu.unwrap_or(MU_B))?),
            _ => Err(CliError::config("species: explicit constants need both mass_kg and wavelength_m")),
        }
    }

    pub fn geometry(&self) -> CliResult<GuideGeometry> {
        let g = &self.geometry;
        let mut c = Checker(Vec::new());
        c.non_negative("geometry.offset_b0_t", g.offset_b0_t);
        let geometry = match &g.loops {
            None => GuideGeometry::reference_design(),
            Some(loops) => {
                if loops.is_empty() {
                    c.push("geometry.loops: need at least one loop".into());
                }
                for (i, l) in loops.iter().enumerate() {
                    c.positive(&format!("geometry.loops[{i}].radius_m"), l.radius_m);
                    if !l.current_a.is_finite() {
                        c.push(format!("geometry.loops[{i}].current_a: must be finite"));
                    }
                    if !l.height_m.is_finite() {
                        c.push(format!("geometry.loops[{i}].height_m: must be finite"));
                    }
                }
                c.finish()?;
                let wires = loops
                    .iter()
                    .map(|l| WireLoop::new(l.radius_m, l.current_a, l.height_m))
                    .collect::<Result<Vec<_>, _>>()?;
                return Ok(GuideGeometry::new(wires, "configured")?);
            }
        };
        c.finish()?;
        Ok(geometry)
    }

    fn interferometer_block(&self) -> CliResult<&InterferometerBlock> {
        self.interferometer
            .as_ref()
            .ok_or_else(|| CliError::config("interferometer: section required for this command"))
    }

    /// Builds the interferometer; exactly one of `interrogation_time_s` or
    /// `guide_radius_m` (+ `n_loops`) fixes the geometry.
    pub fn interferometer(&self) -> CliResult<InterferometerConfig> {
        let species = self.species()?;
        let b = self.interferometer_block()?;
        let mut c = Checker(Vec::new());
        c.positive("interferometer.pulse_duration_s", b.pulse_duration_s);
        c.positive("interferometer.atom_number", b.atom_number);
        c.unit_interval("interferometer.contrast", b.contrast);
        c.unit_interval("interferometer.squeezing", b.squeezing);
        c.non_negative("interferometer.dead_time_s", b.dead_time_s);
        c.positive(
            "interferometer.launch_speed_over_vr",
            b.launch_speed_over_vr,
        );
        if !b.latitude_deg.is_finite() {
            c.push("interferometer.latitude_deg: must be finite".into());
        }
        if b.n_loops == Some(0) {
            c.push("interferometer.n_loops: must be >= 1".into());
        }
        match (b.interrogation_time_s, b.guide_radius_m) {
            (Some(t), None) => {
                c.positive("interferometer.interrogation_time_s", t);
                c.ordered("interferometer.pulse_duration_s", b.pulse_duration_s, "interferometer.interrogation_time_s", t);
            }
            (None, Some(r)) => {
                c.positive("interferometer.guide_radius_m", r);
                if b.n_loops.is_none() {
                    c.push("interferometer.n_loops: required together with guide_radius_m".into());
                }
            }
            (Some(_), Some(_)) => c.push(
                "interferometer: give either interrogation_time_s or guide_radius_m + n_loops, not both".into(),
            ),
            (None, None) => {
                c.push("interferometer: one of interrogation_time_s or guide_radius_m + n_loops is required".into())
            }
        }
        c.finish()?;

        let v = b.launch_speed_over_vr * species.recoil_velocity;
        let n_loops = b.n_loops.unwrap_or(1);
        let cfg = match (b.interrogation_time_s, b.guide_radius_m) {
            (Some(t), _) => InterferometerConfig::from_interrogation_time(
                species,
                b.pulse_duration_s,
                t,
                n_loops,
                v,
            )?,
            (None, Some(r)) => {
                InterferometerConfig::from_geometry(species, b.pulse_duration_s, r, n_loops, v)?
            }
            (None, None) => unreachable!("rejected above"),
        };
        let cfg = cfg
            .with_atom_number(b.atom_number)
            .with_contrast(b.contrast)
            .with_latitude_deg(b.latitude_deg)
            .with_squeezing(b.squeezing)
            .with_dead_time(b.dead_time_s);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn noise_domain(&self) -> CliResult<NoiseDomain> {
        self.noise.domain.parse().map_err(|_| {
            CliError::config(format!(
                "noise.domain: unknown domain `{}`",
                self.noise.domain
            ))
        })
    }

    pub fn psd(&self, base_dir: &Path) -> CliResult<PowerSpectralDensity> {
        let n = &self.noise;
        let domain = self.noise_domain()?;
        let mut c = Checker(Vec::new());
        c.non_negative("noise.white", n.white);
        c.non_negative("noise.flicker", n.flicker);
        c.non_negative("noise.random_walk", n.random_walk);
        c.positive("noise.rel_tol", n.rel_tol);
        if let Some(f) = n.f_min_hz {
            c.non_negative("noise.f_min_hz", f);
        }
        if let Some(f) = n.f_max_hz {
            c.positive("noise.f_max_hz", f);
        }
        if let (Some(lo), Some(hi)) = (n.f_min_hz, n.f_max_hz) {
            c.ordered("noise.f_min_hz", lo, "noise.f_max_hz", hi);
        }
        if n.file.is_some() && (n.white != 0.0 || n.flicker != 0.0 || n.random_walk != 0.0) {
            c.push("noise: give either a PSD file or power-law coefficients, not both".into());
        }
        c.finish()?;
        match &n.file {
            Some(f) => {
                let path = if f.is_absolute() {
                    f.clone()
                } else {
                    base_dir.join(f)
                };
                let (freqs, values) = crate::output::read_psd_csv(&path)?;
                Ok(PowerSpectralDensity::tabulated(domain, freqs, values)?)
            }
            None => Ok(PowerSpectralDensity::power_law(
                domain,
                n.white,
                n.flicker,
                n.random_walk,
            )?),
        }
    }

    pub fn validate_run(&self, command: &str) -> CliResult<()> {
        let r = &self.run;
        let mut c = Checker(Vec::new());
        match command {
            "guide" => {
                c.points("run.guide.map_n_rho", r.guide.map_n_rho, 2);
                c.points("run.guide.map_n_z", r.guide.map_n_z, 2);
                if let Some(rough) = &r.guide.roughness {
                    c.non_negative("run.guide.roughness.amplitude_m", rough.amplitude_m);
                    c.positive(
                        "run.guide.roughness.correlation_length_m",
                        rough.correlation_length_m,
                    );
                    c.points("run.guide.roughness.n_points", rough.n_points, 8);
                    c.points("run.guide.roughness.n_time", rough.n_time, 2);
                    if !matches!(rough.waveform.as_str(), "sine" | "square") {
                        c.push(format!(
                            "run.guide.roughness.waveform: expected sine or square (got {})",
                            rough.waveform
                        ));
                    }
                }
            }
            "transfer" => {
                let t = &r.transfer;
                c.positive("run.transfer.f_min_hz", t.f_min_hz);
                c.positive("run.transfer.f_max_hz", t.f_max_hz);
                c.ordered(
                    "run.transfer.f_min_hz",
                    t.f_min_hz,
                    "run.transfer.f_max_hz",
                    t.f_max_hz,
                );
                c.points("run.transfer.points", t.points, 2);
            }
            "sensitivity" => {
                let s = &r.sensitivity;
                c.positive("run.sensitivity.two_t_min_s", s.two_t_min_s);
                c.positive("run.sensitivity.two_t_max_s", s.two_t_max_s);
                c.ordered(
                    "run.sensitivity.two_t_min_s",
                    s.two_t_min_s,
                    "run.sensitivity.two_t_max_s",
                    s.two_t_max_s,
                );
                c.points("run.sensitivity.points", s.points, 2);
                if s.atom_numbers.is_empty() {
                    c.push("run.sensitivity.atom_numbers: need at least one value".into());
                }
                for (i, &n) in s.atom_numbers.iter().enumerate() {
                    c.positive(&format!("run.sensitivity.atom_numbers[{i}]"), n);
                }
            }
            "allan" => {
                let a = &r.allan;
                if let Some(t) = a.tau_min_s {
                    c.positive("run.allan.tau_min_s", t);
                    c.ordered("run.allan.tau_min_s", t, "run.allan.tau_max_s", a.tau_max_s);
                }
                c.positive("run.allan.tau_max_s", a.tau_max_s);
                c.points("run.allan.points", a.points, 2);
                if !matches!(a.model.as_str(), "projection" | "dick_sum") {
                    c.push(format!(
                        "run.allan.model: expected projection or dick_sum (got {})",
                        a.model
                    ));
                }
                if a.m_max == 0 {
                    c.push("run.allan.m_max: must be >= 1".into());
                }
            }
            "mission" => {
                let m = &r.mission;
                c.positive("run.mission.target_sigma_rad_s", m.target_sigma_rad_s);
                c.positive("run.mission.integration_time_s", m.integration_time_s);
                c.positive("run.mission.v_min_over_vr", m.v_min_over_vr);
                c.positive("run.mission.v_max_over_vr", m.v_max_over_vr);
                c.ordered(
                    "run.mission.v_min_over_vr",
                    m.v_min_over_vr,
                    "run.mission.v_max_over_vr",
                    m.v_max_over_vr,
                );
                c.points("run.mission.points", m.points, 2);
                if !(m.rel_tol > 0.0 && m.rel_tol < 1.0) {
                    c.push(format!(
                        "run.mission.rel_tol: must lie in (0, 1) (got {})",
                        m.rel_tol
                    ));
                }
            }
            _ => {}
        }
        c.finish()
    }
}
