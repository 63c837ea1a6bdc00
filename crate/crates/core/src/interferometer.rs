//! Two-pulse guided Sagnac interferometer: inertial phases, fringe, scale
//! factor, shot-noise sensitivity, and the sensitivity/transfer functions.
//!
//! Geometry convention: both arms travel the full circumference once per
//! loop, so `2T = n_loops · 2πR / v_launch`. With the default launch speed
//! of 2v_r (the ±2ħk Bragg kick) this is `2T = n_loops · πR / v_r`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{AtomSpecies, RotationUnit};

/// Latitude of Paris, the reference site for the ground sensitivity figures (deg).
pub const PARIS_LATITUDE_DEG: f64 = 48.85;

/// Default launch speed in units of the recoil velocity.
pub const DEFAULT_LAUNCH_OVER_VR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub species: AtomSpecies,
    /// Beam-splitter pulse duration τ (s).
    pub pulse_duration: f64,
    /// Total interrogation time 2T (s).
    pub interrogation_time: f64,
    /// m
    pub guide_radius: f64,
    pub n_loops: u32,
    pub atom_number: f64,
    /// Fringe contrast η ∈ (0, 1].
    pub contrast: f64,
    /// rad
    pub latitude: f64,
    /// Squeezing factor ξ ∈ (0, 1]; 1 is the standard quantum limit.
    pub squeezing: f64,
    /// Dead time per cycle (s).
    pub dead_time: f64,
    /// Azimuthal speed of each arm (m/s).
    pub launch_speed: f64,
}

impl InterferometerConfig {
    /// Fixes 2T; the guide radius follows from the loop count and launch speed.
    pub fn from_interrogation_time(
        species: AtomSpecies,
        pulse_duration: f64,
        interrogation_time: f64,
        n_loops: u32,
        launch_speed: f64,
    ) -> Result<Self> {
        let cfg = Self::base(
            species,
            pulse_duration,
            interrogation_time,
            0.0,
            n_loops,
            launch_speed,
        );
        let cfg = Self {
            guide_radius: guide_radius_for(interrogation_time, launch_speed, n_loops),
            ..cfg
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fixes the guide; 2T follows from the loop count and launch speed.
    pub fn from_geometry(
        species: AtomSpecies,
        pulse_duration: f64,
        guide_radius: f64,
        n_loops: u32,
        launch_speed: f64,
    ) -> Result<Self> {
        let two_t = interrogation_time_for(guide_radius, launch_speed, n_loops);
        let cfg = Self::base(
            species,
            pulse_duration,
            two_t,
            guide_radius,
            n_loops,
            launch_speed,
        );
        cfg.validate()?;
        Ok(cfg)
    }

    fn base(species: AtomSpecies, tau: f64, two_t: f64, radius: f64, n_loops: u32, v: f64) -> Self {
        Self {
            species,
            pulse_duration: tau,
            interrogation_time: two_t,
            guide_radius: radius,
            n_loops,
            atom_number: 1e4,
            contrast: 1.0,
            latitude: PI / 2.0,
            squeezing: 1.0,
            dead_time: 0.0,
            launch_speed: v,
        }
    }

    pub fn with_atom_number(mut self, n: f64) -> Self {
        self.atom_number = n;
        self
    }

    pub fn with_contrast(mut self, eta: f64) -> Self {
        self.contrast = eta;
        self
    }

    pub fn with_latitude_deg(mut self, deg: f64) -> Self {
        self.latitude = deg.to_radians();
        self
    }

    pub fn with_squeezing(mut self, xi: f64) -> Self {
        self.squeezing = xi;
        self
    }

    pub fn with_dead_time(mut self, t: f64) -> Self {
        self.dead_time = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("interferometer.pulse_duration", self.pulse_duration)?;
        positive("interferometer.interrogation_time", self.interrogation_time)?;
        positive("interferometer.guide_radius", self.guide_radius)?;
        positive("interferometer.atom_number", self.atom_number)?;
        positive("interferometer.launch_speed", self.launch_speed)?;
        if self.pulse_duration >= self.interrogation_time {
            return Err(invalid(
                "interferometer.pulse_duration",
                format!(
                    "τ = {} s must be shorter than 2T = {} s",
                    self.pulse_duration, self.interrogation_time
                ),
            ));
        }
        if self.n_loops == 0 {
            return Err(invalid("interferometer.n_loops", "must be >= 1"));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return Err(invalid("interferometer.contrast", "must lie in (0, 1]"));
        }
        if !(self.squeezing > 0.0 && self.squeezing <= 1.0) {
            return Err(invalid("interferometer.squeezing", "must lie in (0, 1]"));
        }
        if !(self.dead_time.is_finite() && self.dead_time >= 0.0) {
            return Err(invalid(
                "interferometer.dead_time",
                "must be finite and >= 0",
            ));
        }
        if !self.latitude.is_finite() {
            return Err(invalid("interferometer.latitude", "must be finite"));
        }
        Ok(())
    }

    /// T (half the interrogation time).
    pub fn half_time(&self) -> f64 {
        0.5 * self.interrogation_time
    }

    /// One measurement cycle, 2T plus dead time (s).
    pub fn cycle_time(&self) -> f64 {
        self.interrogation_time + self.dead_time
    }

    pub fn effective_wavevector(&self) -> f64 {
        self.species.effective_wavevector()
    }

    /// Launch speed in units of the recoil velocity.
    pub fn launch_over_recoil(&self) -> f64 {
        self.launch_speed / self.species.recoil_velocity
    }

    /// dΦ/dΩ = (M/ħ)·v²·(2T)²·sin θ / π (rad per rad/s).
    pub fn scale_factor(&self) -> f64 {
        self.species.mass_over_hbar()
            * self.launch_speed.powi(2)
            * self.interrogation_time.powi(2)
            * self.latitude.sin()
            / PI
    }

    fn check_orientation(&self) -> Result<()> {
        if self.latitude.sin().abs() < 1e-12 {
            Err(Error::DegenerateOrientation)
        } else {
            Ok(())
        }
    }
}

/// R = v·2T / (2π·n_loops).
pub fn guide_radius_for(interrogation_time: f64, launch_speed: f64, n_loops: u32) -> f64 {
    launch_speed * interrogation_time / (2.0 * PI * n_loops as f64)
}

/// 2T = n_loops·2πR / v.
pub fn interrogation_time_for(guide_radius: f64, launch_speed: f64, n_loops: u32) -> f64 {
    n_loops as f64 * 2.0 * PI * guide_radius / launch_speed
}

/// Φ_a = k_eff·a·T² for collinear k and a.
pub fn acceleration_phase(k_eff: f64, acceleration: f64, half_time: f64) -> f64 {
    k_eff * acceleration * half_time * half_time
}

/// Φ_a = k·a T².
pub fn acceleration_phase_vec(k_eff: [f64; 3], acceleration: [f64; 3], half_time: f64) -> f64 {
    dot(k_eff, acceleration) * half_time * half_time
}

/// Φ_Ω = 2·k_eff·Ω·v·T² for mutually orthogonal k, Ω, v (free-fall case).
pub fn rotation_phase_free(k_eff: f64, rate: f64, velocity: f64, half_time: f64) -> f64 {
    2.0 * k_eff * rate * velocity * half_time * half_time
}

/// Φ_Ω = 2 k·(Ω × v) T².
pub fn rotation_phase_free_vec(
    k_eff: [f64; 3],
    rate: [f64; 3],
    velocity: [f64; 3],
    half_time: f64,
) -> f64 {
    let c = [
        rate[1] * velocity[2] - rate[2] * velocity[1],
        rate[2] * velocity[0] - rate[0] * velocity[2],
        rate[0] * velocity[1] - rate[1] * velocity[0],
    ];
    2.0 * dot(k_eff, c) * half_time * half_time
}

/// Sagnac phase of the guided interferometer for a rotation `rate` about
/// the local vertical projected on the guide normal.
pub fn sagnac_phase(config: &InterferometerConfig, rate: f64) -> f64 {
    config.scale_factor() * rate
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeReadout {
    /// Expected atoms in the |p = 0⟩ output port.
    pub expected_population: f64,
    /// Bias phase (π/2 = mid-fringe).
    pub operating_phase_offset: f64,
}

/// P = (N/2)·[1 − η cos(Φ + π/2)].
pub fn fringe_population(config: &InterferometerConfig, phase: f64) -> FringeReadout {
    let offset = PI / 2.0;
    FringeReadout {
        expected_population: 0.5
            * config.atom_number
            * (1.0 - config.contrast * (phase + offset).cos()),
        operating_phase_offset: offset,
    }
}

/// Projection-noise-limited rotation sensitivity per shot (rad/s):
/// δΩ = ξ·√(2/N) / (η·dΦ/dΩ).
pub fn shot_noise_sensitivity(config: &InterferometerConfig) -> Result<f64> {
    config.validate()?;
    config.check_orientation()?;
    Ok(config.squeezing * (2.0 / config.atom_number).sqrt()
        / (config.contrast * config.scale_factor().abs()))
}

/// The same sensitivity under the reporting conventions in use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// δΩ for one shot (rad/s).
    pub per_shot: f64,
    /// δΩ·√(cycle time) (rad s⁻¹ Hz^-1/2).
    pub per_root_hz: f64,
    /// ARW obtained by reading the per-shot value as rad s⁻¹ Hz^-1/2 (°/√h).
    pub arw_per_shot_reading: f64,
    /// ARW from `per_root_hz` (°/√h).
    pub arw: f64,
    pub cycle_time: f64,
    pub sin_latitude: f64,
    pub launch_over_recoil: f64,
    pub guide_radius: f64,
}

pub fn sensitivity_report(config: &InterferometerConfig) -> Result<SensitivityReport> {
    let per_shot = shot_noise_sensitivity(config)?;
    let per_root_hz = per_shot * config.cycle_time().sqrt();
    Ok(SensitivityReport {
        per_shot,
        per_root_hz,
        arw_per_shot_reading: crate::units::convert_rotation(
            per_shot,
            RotationUnit::DegPerRootHour,
        )?,
        arw: crate::units::convert_rotation(per_root_hz, RotationUnit::DegPerRootHour)?,
        cycle_time: config.cycle_time(),
        sin_latitude: config.latitude.sin(),
        launch_over_recoil: config.launch_over_recoil(),
        guide_radius: config.guide_radius,
    })
}

/// Sensitivity function g(t) for time measured from the interferometer
/// centre: linear ramps across the two pulses, 1 in between.
pub fn sensitivity_function_g(t: f64, config: &InterferometerConfig) -> f64 {
    let half = config.half_time();
    let tau = config.pulse_duration;
    if t < -half || t > half {
        0.0
    } else if t <= -half + tau {
        (t + half) / tau
    } else if t < half - tau {
        1.0
    } else {
        (half - t) / tau
    }
}

/// Time-domain transfer function: +1/τ over the first pulse, −1/τ over the last.
pub fn transfer_h(t: f64, config: &InterferometerConfig) -> f64 {
    let half = config.half_time();
    let tau = config.pulse_duration;
    if (-half..=-half + tau).contains(&t) {
        1.0 / tau
    } else if (half - tau..=half).contains(&t) {
        -1.0 / tau
    } else {
        0.0
    }
}

/// H(f) = −(2i/(πfτ))·sin(πfτ)·sin(πf(2T−τ)); H(0) = 0.
pub fn transfer_function(f: f64, config: &InterferometerConfig) -> Complex64 {
    if f == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let tau = config.pulse_duration;
    let x = PI * f * tau;
    let gap = PI * f * (config.interrogation_time - tau);
    Complex64::new(0.0, -2.0 * x.sin() / x * gap.sin())
}

/// |H(f)|².
pub fn transfer_power(f: f64, config: &InterferometerConfig) -> f64 {
    transfer_function(f, config).norm_sqr()
}

/// (f_HP, f_LP) = (1/(πτ), 1/(π(2T−τ))).
pub fn corner_frequencies(config: &InterferometerConfig) -> (f64, f64) {
    let tau = config.pulse_duration;
    (
        1.0 / (PI * tau),
        1.0 / (PI * (config.interrogation_time - tau)),
    )
}

/// Zeros of H in (f_min, f_max]: n/τ and n/(2T−τ), merged and sorted.
pub fn transfer_zeros(config: &InterferometerConfig, f_min: f64, f_max: f64) -> Vec<f64> {
    let p1 = 1.0 / config.pulse_duration;
    let p2 = 1.0 / (config.interrogation_time - config.pulse_duration);
    let series = |p: f64| {
        let start = (f_min / p).floor().max(0.0) as u64 + 1;
        (start..)
            .map(move |n| n as f64 * p)
            .take_while(move |&f| f <= f_max)
    };
    let mut a = series(p1).peekable();
    let mut b = series(p2).peekable();
    let mut out: Vec<f64> = Vec::new();
    loop {
        let next = match (a.peek(), b.peek()) {
            (Some(&x), Some(&y)) => {
                if x <= y {
                    a.next()
                } else {
                    b.next()
                }
            }
            (Some(_), None) => a.next(),
            (None, Some(_)) => b.next(),
            (None, None) => break,
        };
        let f = next.expect("peeked");
        if f > f_min && out.last().is_none_or(|&l| f - l > 1e-12 * f) {
            out.push(f);
        }
    }
    out
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
