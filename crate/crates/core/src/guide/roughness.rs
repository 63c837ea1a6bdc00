//! First-order model of wire-edge corrugation and its suppression by
//! zero-mean current modulation.
//!
//! The roughness potential is linear in the wire current, so reversing the
//! current exchanges potential maxima and minima, and averaging over a
//! zero-mean waveform nulls it.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units::AtomSpecies;

/// Geometric coupling between the smoothed edge slope and the field (T·m/A).
pub const CORRUGATION_CONSTANT: f64 = 1.0;

/// Random edge profile tabulated on a uniform periodic arc-length grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrugationModel {
    /// rms of the relative current deviation.
    pub amplitude: f64,
    /// m
    pub correlation_length: f64,
    pub seed: u64,
    /// Total arc length of the grid (m).
    pub circumference: f64,
    /// Width of the low-pass kernel applied to the edge slope, normally the
    /// guide height (m).
    pub smoothing_length: f64,
    /// Zero-mean f(s).
    pub profile: Vec<f64>,
}

impl CorrugationModel {
    pub fn generate(
        amplitude: f64,
        correlation_length: f64,
        seed: u64,
        circumference: f64,
        n_points: usize,
        smoothing_length: f64,
    ) -> Result<Self> {
        if n_points < 8 {
            return Err(invalid(
                "corrugation.n_points",
                "need at least 8 grid points",
            ));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(invalid("corrugation.amplitude", "must be finite and >= 0"));
        }
        for (field, v) in [
            ("corrugation.correlation_length", correlation_length),
            ("corrugation.circumference", circumference),
            ("corrugation.smoothing_length", smoothing_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, "must be finite and > 0"));
            }
        }
        let ds = circumference / n_points as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let white: Vec<f64> = (0..n_points).map(|_| normal.sample(&mut rng)).collect();

        let mut profile = gaussian_smooth(&white, correlation_length / ds);
        let mean = profile.iter().sum::<f64>() / n_points as f64;
        profile.iter_mut().for_each(|v| *v -= mean);
        let rms = rms(&profile);
        if amplitude == 0.0 || rms == 0.0 {
            profile.iter_mut().for_each(|v| *v = 0.0);
        } else {
            let k = amplitude / rms;
            profile.iter_mut().for_each(|v| *v *= k);
        }

        Ok(Self {
            amplitude,
            correlation_length,
            seed,
            circumference,
            smoothing_length,
            profile,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.circumference / self.profile.len() as f64
    }

    /// Arc-length coordinate of each grid point (m).
    pub fn arc_lengths(&self) -> Vec<f64> {
        let ds = self.spacing();
        (0..self.profile.len()).map(|i| i as f64 * ds).collect()
    }

    /// Smoothed edge slope g(s), the shape of the potential at unit current.
    pub fn slope_kernel(&self) -> Vec<f64> {
        let n = self.profile.len();
        let ds = self.spacing();
        let slope: Vec<f64> = (0..n)
            .map(|i| (self.profile[(i + 1) % n] - self.profile[(i + n - 1) % n]) / (2.0 * ds))
            .collect();
        gaussian_smooth(&slope, self.smoothing_length / ds)
    }
}

/// V(s) = μ·c·I·g(s) on the corrugation grid (J).
pub fn roughness_potential(
    corrugation: &CorrugationModel,
    current: f64,
    species: &AtomSpecies,
) -> Result<Vec<f64>> {
    if !current.is_finite() {
        return Err(invalid("current", "must be finite"));
    }
    let coupling = species.magnetic_moment * CORRUGATION_CONSTANT * current;
    Ok(corrugation
        .slope_kernel()
        .into_iter()
        .map(|g| coupling * g)
        .collect())
}

/// Periodic drive current of the guide wires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CurrentWaveform {
    /// offset + amplitude·sin(2πt/period)
    Sine { amplitude: f64, offset: f64 },
    /// offset ± amplitude over the two half periods
    Square { amplitude: f64, offset: f64 },
    /// One period sampled uniformly.
    Sampled(Vec<f64>),
}

impl CurrentWaveform {
    pub fn samples(&self, n: usize) -> Vec<f64> {
        match self {
            CurrentWaveform::Sine { amplitude, offset } => (0..n)
                .map(|j| offset + amplitude * (2.0 * PI * j as f64 / n as f64).sin())
                .collect(),
            CurrentWaveform::Square { amplitude, offset } => (0..n)
                .map(|j| {
                    if 2 * j < n {
                        offset + amplitude
                    } else {
                        offset - amplitude
                    }
                })
                .collect(),
            CurrentWaveform::Sampled(v) => v.clone(),
        }
    }
}

/// Time-averaged roughness potential under a modulated current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoughnessAverage {
    pub potential: Vec<f64>,
    pub mean_current: f64,
    pub peak_current: f64,
    /// The waveform is zero-mean to 1e-10 of its peak, so the first-order
    /// roughness is fully suppressed.
    pub suppressed: bool,
}

/// Averages [`roughness_potential`] over one period of `waveform`
/// (`n_time` samples; ignored for [`CurrentWaveform::Sampled`]).
pub fn modulated_roughness_average(
    corrugation: &CorrugationModel,
    waveform: &CurrentWaveform,
    species: &AtomSpecies,
    n_time: usize,
) -> Result<RoughnessAverage> {
    let currents = waveform.samples(n_time);
    if currents.len() < 2 || currents.iter().any(|c| !c.is_finite()) {
        return Err(invalid(
            "waveform",
            "need at least two finite samples per period",
        ));
    }
    let unit = roughness_potential(corrugation, 1.0, species)?;
    let nt = currents.len() as f64;
    let potential = unit
        .iter()
        .map(|&v1| currents.iter().map(|&i| i * v1).sum::<f64>() / nt)
        .collect();
    let mean_current = currents.iter().sum::<f64>() / nt;
    let peak_current = currents.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    Ok(RoughnessAverage {
        potential,
        mean_current,
        peak_current,
        suppressed: mean_current.abs() <= 1e-10 * peak_current,
    })
}

pub(crate) fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Circular convolution with a unit-area Gaussian of standard deviation
/// `sigma_samples` (in grid steps), truncated at 6σ.
fn gaussian_smooth(v: &[f64], sigma_samples: f64) -> Vec<f64> {
    let n = v.len();
    if sigma_samples < 1e-3 {
        return v.to_vec();
    }
    let half = ((6.0 * sigma_samples).ceil() as usize).min(n / 2);
    let weights: Vec<f64> = (0..=half)
        .map(|k| (-0.5 * (k as f64 / sigma_samples).powi(2)).exp())
        .collect();
    let norm = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
    (0..n)
        .map(|i| {
            let mut acc = weights[0] * v[i];
            for (k, w) in weights.iter().enumerate().skip(1) {
                acc += w * (v[(i + k) % n] + v[(i + n - k) % n]);
            }
            acc / norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::species_rb87;

    fn model(amplitude: f64) -> CorrugationModel {
        CorrugationModel::generate(amplitude, 20e-6, 7, 2.0 * PI * 500e-6, 2048, 13e-6).unwrap()
    }

    #[test]
    fn profile_is_zero_mean_and_reproducible() {
        let m = model(1e-3);
        let mean = m.profile.iter().sum::<f64>() / m.profile.len() as f64;
        assert!(mean.abs() < 1e-10 * rms(&m.profile));
        assert!((rms(&m.profile) - 1e-3).abs() < 1e-15);
        assert_eq!(m, model(1e-3));
        let other =
            CorrugationModel::generate(1e-3, 20e-6, 8, 2.0 * PI * 500e-6, 2048, 13e-6).unwrap();
        assert_ne!(m.profile, other.profile);
    }

    #[test]
    fn reversal_flips_potential() {
        let rb = species_rb87();
        let m = model(1e-3);
        let v = roughness_potential(&m, 0.12, &rb).unwrap();
        let w = roughness_potential(&m, -0.12, &rb).unwrap();
        assert!(v.iter().zip(&w).all(|(a, b)| *a == -*b));
        let imax = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        let imin = (0..w.len()).min_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        assert_eq!(imax, imin);
    }

    #[test]
    fn flat_wire_has_no_roughness() {
        let v = roughness_potential(&model(0.0), 0.1, &species_rb87()).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rms_linear_in_current() {
        let rb = species_rb87();
        let m = model(1e-3);
        let r: Vec<f64> = [0.01, 0.02, 0.04]
            .iter()
            .map(|&i| rms(&roughness_potential(&m, i, &rb).unwrap()))
            .collect();
        assert!((r[1] / r[0] - 2.0).abs() < 1e-12);
        assert!((r[2] / r[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_modulation_nulls_roughness() {
        let rb = species_rb87();
        let m = model(1e-3);
        let reference = rms(&roughness_potential(&m, 0.12, &rb).unwrap());
        for wf in [
            CurrentWaveform::Sine {
                amplitude: 0.12,
                offset: 0.0,
            },
            CurrentWaveform::Square {
                amplitude: 0.12,
                offset: 0.0,
            },
        ] {
            let avg = modulated_roughness_average(&m, &wf, &rb, 256).unwrap();
            assert!(avg.suppressed);
            assert!(avg.potential.iter().all(|v| v.abs() <= 1e-10 * reference));
        }
    }

    #[test]
    fn dc_offset_leaves_proportional_residual() {
        let rb = species_rb87();
        let m = model(1e-3);
        let full = roughness_potential(&m, 0.12, &rb).unwrap();
        let wf = CurrentWaveform::Sine {
            amplitude: 0.12,
            offset: 0.0012,
        };
        let avg = modulated_roughness_average(&m, &wf, &rb, 256).unwrap();
        assert!(!avg.suppressed);
        let scale = rms(&full);
        for (a, f) in avg.potential.iter().zip(&full) {
            assert!((a - 0.01 * f).abs() < 1e-12 * scale);
        }
    }
}
