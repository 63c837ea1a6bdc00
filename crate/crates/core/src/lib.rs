//! Design and noise analysis for guided-atom Sagnac gyroscopes on atom chips.
//!
//! The crate goes from microwire geometry to a magnetic guide, from the guide
//! to an interferometer scale factor and transfer function, and from noise
//! spectra to phase variance, Allan deviation and mission feasibility.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod guide;
pub mod interferometer;
pub mod magnetostatics;
pub mod noise;
pub mod quadrature;
pub mod stability;
pub mod units;

pub use error::{Error, Result};
pub use guide::{
    characterize_guide, find_guide_minimum, CorrugationModel, CurrentWaveform,
    GuideCharacterization, SearchBox,
};
pub use interferometer::{
    sensitivity_report, shot_noise_sensitivity, InterferometerConfig, SensitivityReport,
};
pub use magnetostatics::{FieldSource, FieldVector, GuideGeometry, WireLoop};
pub use noise::{Band, NoiseDomain, PowerSpectralDensity, VarianceOptions, VarianceResult};
pub use stability::{AllanCurve, AllanModel, FeasibilityBoundary, PhenomenonRate};
pub use units::{species_rb87, AtomSpecies, RotationRate, RotationUnit};
