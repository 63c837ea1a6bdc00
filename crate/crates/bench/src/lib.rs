//! Shared fixtures for the criterion benchmarks.

use chipgyro_core::interferometer::InterferometerConfig;
use chipgyro_core::magnetostatics::GuideGeometry;
use chipgyro_core::noise::{NoiseDomain, PowerSpectralDensity};
use chipgyro_core::units::species_rb87;

/// τ = 20 μs, 2T = 4 s, single loop, launch 2v_r.
pub fn reference_interferometer() -> InterferometerConfig {
    let rb = species_rb87();
    let v = 2.0 * rb.recoil_velocity;
    InterferometerConfig::from_interrogation_time(rb, 20e-6, 4.0, 1, v)
        .expect("valid reference config")
}

pub fn reference_guide() -> GuideGeometry {
    GuideGeometry::reference_design()
}

/// White + flicker + random-walk phase noise.
pub fn colored_phase_noise() -> PowerSpectralDensity {
    PowerSpectralDensity::power_law(NoiseDomain::Phase, 1e-10, 1e-11, 1e-13).expect("valid PSD")
}

/// Sample points on a ρ–z grid around the guide (m).
pub fn field_points(n: usize) -> Vec<(f64, f64)> {
    let g = reference_guide();
    let r = g.central_radius();
    let h = g.height();
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            (r * (0.5 + t), h + 1e-6 + 50e-6 * t)
        })
        .collect()
}
