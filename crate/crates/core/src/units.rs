//! Physical constants, the guided species, and rotation-rate unit conversions.
//!
//! Everything inside the crate is SI. Degree-based units only appear at
//! presentation boundaries through [`convert_rotation`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr magneton (J/T).
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Vacuum permeability (T m / A).
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;

/// Earth's sidereal rotation rate as used for the phenomenon ladder (rad/s).
pub const EARTH_RATE: f64 = 7.29e-5;
/// Julian year rounded to four digits (s).
pub const YEAR: f64 = 3.156e7;
/// One arcsecond of angle (rad).
pub const ARCSECOND: f64 = PI / (180.0 * 3600.0);

const RAD_S_TO_DEG_H: f64 = (180.0 / PI) * 3600.0;
const RAD_S_SQRT_HZ_TO_DEG_SQRT_H: f64 = (180.0 / PI) * 60.0;

/// An atomic species as seen by the interferometer and the magnetic guide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Wavelength of the optical transition driving the Bragg beams (m).
    pub wavelength: f64,
    /// Single-photon wavevector 2π/λ (rad/m).
    pub wavevector: f64,
    /// ħk/M (m/s).
    pub recoil_velocity: f64,
    /// Magnetic moment of the guided Zeeman state (J/T).
    pub magnetic_moment: f64,
}

impl AtomSpecies {
    /// Builds a species from its primitive constants; `wavevector` and
    /// `recoil_velocity` are derived.
    pub fn new(
        name: impl Into<String>,
        mass: f64,
        wavelength: f64,
        magnetic_moment: f64,
    ) -> Result<Self> {
        for (field, v) in [
            ("species.mass", mass),
            ("species.wavelength", wavelength),
            ("species.magnetic_moment", magnetic_moment),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        let wavevector = 2.0 * PI / wavelength;
        Ok(Self {
            name: name.into(),
            mass,
            wavelength,
            wavevector,
            recoil_velocity: HBAR * wavevector / mass,
            magnetic_moment,
        })
    }

    /// M/ħ (s/m²).
    pub fn mass_over_hbar(&self) -> f64 {
        self.mass / HBAR
    }

    /// Two-photon wavevector 2k of a counter-propagating beam pair.
    pub fn effective_wavevector(&self) -> f64 {
        2.0 * self.wavevector
    }
}

/// ⁸⁷Rb on the D₂ line, guided in |F=2, m_F=2⟩ (μ = μ_B).
pub fn species_rb87() -> AtomSpecies {
    AtomSpecies::new("Rb87", 1.443_160_648e-25, 780.241_209_686e-9, MU_B)
        .expect("reference constants are valid")
}

/// Target units for reporting rotation quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationUnit {
    /// rad/s (identity).
    RadPerSecond,
    /// °/h, for rates.
    DegPerHour,
    /// °/√h, for a rate sensitivity given in rad s⁻¹ Hz^-1/2 (angular random walk).
    DegPerRootHour,
}

impl RotationUnit {
    fn factor(self) -> f64 {
        match self {
            RotationUnit::RadPerSecond => 1.0,
            RotationUnit::DegPerHour => RAD_S_TO_DEG_H,
            RotationUnit::DegPerRootHour => RAD_S_SQRT_HZ_TO_DEG_SQRT_H,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RotationUnit::RadPerSecond => "rad/s",
            RotationUnit::DegPerHour => "deg/h",
            RotationUnit::DegPerRootHour => "deg/sqrt(h)",
        }
    }
}

impl fmt::Display for RotationUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for RotationUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rad/s" | "rad_s" => Ok(RotationUnit::RadPerSecond),
            "deg/h" | "deg_h" => Ok(RotationUnit::DegPerHour),
            "deg/sqrt(h)" | "deg_sqrt_h" | "arw" => Ok(RotationUnit::DegPerRootHour),
            other => Err(Error::UnknownUnit(other.to_string())),
        }
    }
}

/// Converts a value in rad/s (or rad s⁻¹ Hz^-1/2 for ARW) into `target`.
pub fn convert_rotation(value: f64, target: RotationUnit) -> Result<f64> {
    if !value.is_finite() {
        return Err(invalid("value", "rotation value must be finite"));
    }
    Ok(value * target.factor())
}

/// Same as [`convert_rotation`] with the unit given by name.
pub fn convert_rotation_named(value: f64, target: &str) -> Result<f64> {
    convert_rotation(value, target.parse()?)
}

/// Converts a value expressed in `unit` back to rad/s.
pub fn rotation_from_unit(value: f64, unit: RotationUnit) -> Result<f64> {
    if !value.is_finite() {
        return Err(invalid("value", "rotation value must be finite"));
    }
    Ok(value / unit.factor())
}

/// A rotation rate stored in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct RotationRate(pub f64);

impl RotationRate {
    pub fn from_deg_per_hour(v: f64) -> Self {
        Self(v / RAD_S_TO_DEG_H)
    }

    pub fn rad_per_s(self) -> f64 {
        self.0
    }

    pub fn deg_per_hour(self) -> f64 {
        self.0 * RAD_S_TO_DEG_H
    }

    /// Reads the value as a sensitivity in rad s⁻¹ Hz^-1/2 and returns the ARW in °/√h.
    pub fn arw_deg_per_root_hour(self) -> f64 {
        self.0 * RAD_S_SQRT_HZ_TO_DEG_SQRT_H
    }

    pub fn from_arw_deg_per_root_hour(v: f64) -> Self {
        Self(v / RAD_S_SQRT_HZ_TO_DEG_SQRT_H)
    }
}
