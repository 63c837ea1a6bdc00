//! Propagation of phase, acceleration and rotation noise through the
//! interferometer transfer function.
//!
//! Convention: one-sided PSDs in ordinary frequency f (Hz), integrated over
//! f ∈ [f_min, f_max]. Angular frequency ω = 2πf only appears inside the
//! kernels below.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interferometer::{transfer_power, transfer_zeros, InterferometerConfig};
use crate::quadrature::{integrate, integrate_panels};

pub const CONVENTION: &str = "one-sided, ordinary frequency";
pub const DEFAULT_F_MIN: f64 = 1e-4;
pub const DEFAULT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDomain {
    /// rad²/Hz
    Phase,
    /// (m/s²)²/Hz
    Acceleration,
    /// (rad/s)²/Hz
    Rotation,
}

impl NoiseDomain {
    pub fn name(self) -> &'static str {
        match self {
            NoiseDomain::Phase => "phase",
            NoiseDomain::Acceleration => "acceleration",
            NoiseDomain::Rotation => "rotation",
        }
    }

    /// S_φ/S_domain written as c·f^p: returns (c, p).
    fn phase_weight(self, k_eff: f64, radius: f64) -> (f64, f64) {
        match self {
            NoiseDomain::Phase => (1.0, 0.0),
            NoiseDomain::Acceleration => (k_eff * k_eff / (2.0 * PI).powi(4), -4.0),
            NoiseDomain::Rotation => ((2.0 * k_eff * radius).powi(2) / (2.0 * PI).powi(2), -2.0),
        }
    }
}

impl fmt::Display for NoiseDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for NoiseDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" => Ok(NoiseDomain::Phase),
            "acceleration" => Ok(NoiseDomain::Acceleration),
            "rotation" => Ok(NoiseDomain::Rotation),
            other => Err(invalid("noise.domain", format!("unknown domain `{other}`"))),
        }
    }
}

/// h·f^α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Gaussian line of total power `power`, centre and standard deviation in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub center: f64,
    pub width: f64,
    pub power: f64,
}

impl SpectralLine {
    fn value(&self, f: f64) -> f64 {
        let x = (f - self.center) / self.width;
        self.power / (self.width * (2.0 * PI).sqrt()) * (-0.5 * x * x).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PsdModel {
    Analytic {
        terms: Vec<PowerLawTerm>,
        lines: Vec<SpectralLine>,
    },
    /// Log-log interpolated table; power-law extrapolation from the end segments.
    Tabulated {
        frequencies: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectralDensity {
    pub domain: NoiseDomain,
    pub model: PsdModel,
}

impl PowerSpectralDensity {
    /// h₀ + h₋₁/f + h₋₂/f².
    pub fn power_law(
        domain: NoiseDomain,
        white: f64,
        flicker: f64,
        random_walk: f64,
    ) -> Result<Self> {
        let terms = [(white, 0.0), (flicker, -1.0), (random_walk, -2.0)]
            .into_iter()
            .filter(|&(c, _)| c != 0.0)
            .map(|(coefficient, exponent)| PowerLawTerm {
                coefficient,
                exponent,
            })
            .collect();
        Self::analytic(domain, terms, Vec::new())
    }

    pub fn white(domain: NoiseDomain, level: f64) -> Result<Self> {
        Self::power_law(domain, level, 0.0, 0.0)
    }

    pub fn zero(domain: NoiseDomain) -> Self {
        Self {
            domain,
            model: PsdModel::Analytic {
                terms: Vec::new(),
                lines: Vec::new(),
            },
        }
    }

    pub fn analytic(
        domain: NoiseDomain,
        terms: Vec<PowerLawTerm>,
        lines: Vec<SpectralLine>,
    ) -> Result<Self> {
        for t in &terms {
            if !(t.coefficient.is_finite() && t.coefficient >= 0.0 && t.exponent.is_finite()) {
                return Err(invalid(
                    "noise.model",
                    "power-law coefficients must be finite and >= 0",
                ));
            }
        }
        for l in &lines {
            if !(l.center > 0.0 && l.width > 0.0 && l.power >= 0.0 && l.power.is_finite()) {
                return Err(invalid(
                    "noise.model",
                    "spectral lines need centre > 0, width > 0, power >= 0",
                ));
            }
        }
        Ok(Self {
            domain,
            model: PsdModel::Analytic { terms, lines },
        })
    }

    pub fn tabulated(domain: NoiseDomain, frequencies: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if frequencies.len() != values.len() || frequencies.len() < 2 {
            return Err(invalid(
                "noise.table",
                "need at least two (f, S) rows of equal length",
            ));
        }
        if frequencies[0] <= 0.0 || frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "noise.table",
                "frequencies must be > 0 and strictly increasing",
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("noise.table", "PSD values must be finite and >= 0"));
        }
        Ok(Self {
            domain,
            model: PsdModel::Tabulated {
                frequencies,
                values,
            },
        })
    }

    pub fn value(&self, f: f64) -> f64 {
        match &self.model {
            PsdModel::Analytic { terms, lines } => {
                terms
                    .iter()
                    .map(|t| t.coefficient * f.powf(t.exponent))
                    .sum::<f64>()
                    + lines.iter().map(|l| l.value(f)).sum::<f64>()
            }
            PsdModel::Tabulated {
                frequencies,
                values,
            } => interpolate_log_log(frequencies, values, f),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.model {
            PsdModel::Analytic { terms, lines } => {
                terms.iter().all(|t| t.coefficient == 0.0) && lines.iter().all(|l| l.power == 0.0)
            }
            PsdModel::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    fn lines(&self) -> &[SpectralLine] {
        match &self.model {
            PsdModel::Analytic { lines, .. } => lines,
            PsdModel::Tabulated { .. } => &[],
        }
    }

    /// Re-expresses the PSD in another domain: S_a = ω⁴/k_eff²·S_φ,
    /// S_Ω = ω²/(2·k_eff·R)²·S_φ. Exact for power laws and tables; lines
    /// cannot be carried over.
    pub fn convert(&self, target: NoiseDomain, k_eff: f64, radius: f64) -> Result<Self> {
        let (c_src, p_src) = self.domain.phase_weight(k_eff, radius);
        let (c_dst, p_dst) = target.phase_weight(k_eff, radius);
        let ratio = c_src / c_dst;
        let shift = p_src - p_dst;
        let model = match &self.model {
            PsdModel::Analytic { terms, lines } => {
                if !lines.is_empty() {
                    return Err(invalid(
                        "noise.model",
                        "spectral lines do not convert between domains",
                    ));
                }
                PsdModel::Analytic {
                    terms: terms
                        .iter()
                        .map(|t| PowerLawTerm {
                            coefficient: t.coefficient * ratio,
                            exponent: t.exponent + shift,
                        })
                        .collect(),
                    lines: Vec::new(),
                }
            }
            PsdModel::Tabulated {
                frequencies,
                values,
            } => PsdModel::Tabulated {
                frequencies: frequencies.clone(),
                values: frequencies
                    .iter()
                    .zip(values)
                    .map(|(f, v)| v * ratio * f.powf(shift))
                    .collect(),
            },
        };
        Ok(Self {
            domain: target,
            model,
        })
    }
}

fn interpolate_log_log(f_grid: &[f64], s_grid: &[f64], f: f64) -> f64 {
    let n = f_grid.len();
    let segment = |i: usize| {
        let (f0, f1, s0, s1) = (f_grid[i], f_grid[i + 1], s_grid[i], s_grid[i + 1]);
        if f == f0 {
            return s0;
        }
        if f == f1 {
            return s1;
        }
        if s0 > 0.0 && s1 > 0.0 {
            let t = (f / f0).ln() / (f1 / f0).ln();
            (s0.ln() + t * (s1 / s0).ln()).exp()
        } else if f >= f0 && f <= f1 {
            s0 + (s1 - s0) * (f - f0) / (f1 - f0)
        } else {
            0.0
        }
    };
    if f <= f_grid[0] {
        return segment(0);
    }
    if f >= f_grid[n - 1] {
        return segment(n - 2);
    }
    let i = f_grid.partition_point(|&x| x <= f) - 1;
    segment(i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub f_min: f64,
    pub f_max: f64,
}

impl Band {
    /// [10⁻⁴ Hz, 10/τ].
    pub fn default_for(config: &InterferometerConfig) -> Self {
        Self {
            f_min: DEFAULT_F_MIN,
            f_max: 10.0 / config.pulse_duration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceOptions {
    /// `None` selects [`Band::default_for`].
    pub band: Option<Band>,
    pub rel_tol: f64,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self {
            band: None,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

/// Output-phase variance with the integration metadata that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceResult {
    /// rad²
    pub value: f64,
    pub error_estimate: f64,
    pub band: Band,
    pub convention: String,
    /// Share of `value` coming from the lowest decade [f_min, 10 f_min];
    /// large values flag sensitivity to the infrared cutoff.
    pub infrared_share: f64,
    pub evaluations: usize,
}

/// σ² = ∫ S_φ |H|² df.
pub fn phase_variance(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
) -> Result<VarianceResult> {
    phase_variance_with(psd, config, &VarianceOptions::default())
}

pub fn phase_variance_with(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    options: &VarianceOptions,
) -> Result<VarianceResult> {
    expect_domain(psd, NoiseDomain::Phase)?;
    propagate(psd, config, options, 1.0, 0.0)
}

/// σ² = ∫ k_eff²/ω⁴ · S_a |H|² df.
pub fn acceleration_phase_variance(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    k_eff: f64,
) -> Result<VarianceResult> {
    acceleration_phase_variance_with(psd, config, k_eff, &VarianceOptions::default())
}

pub fn acceleration_phase_variance_with(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    k_eff: f64,
    options: &VarianceOptions,
) -> Result<VarianceResult> {
    expect_domain(psd, NoiseDomain::Acceleration)?;
    let (c, p) = NoiseDomain::Acceleration.phase_weight(k_eff, 0.0);
    propagate(psd, config, options, c, p)
}

/// σ² = ∫ (2·k_eff·R)²/ω² · S_Ω |H|² df.
pub fn rotation_phase_variance(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    k_eff: f64,
    radius: f64,
) -> Result<VarianceResult> {
    rotation_phase_variance_with(psd, config, k_eff, radius, &VarianceOptions::default())
}

pub fn rotation_phase_variance_with(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    k_eff: f64,
    radius: f64,
    options: &VarianceOptions,
) -> Result<VarianceResult> {
    expect_domain(psd, NoiseDomain::Rotation)?;
    let (c, p) = NoiseDomain::Rotation.phase_weight(k_eff, radius);
    propagate(psd, config, options, c, p)
}

/// Rotation-rate standard deviation equivalent to an output-phase standard
/// deviation: σ_Ω = σ_Φ / (dΦ/dΩ).
pub fn phase_sigma_to_rotation_sigma(
    sigma_phase: f64,
    config: &InterferometerConfig,
) -> Result<f64> {
    if config.latitude.sin().abs() < 1e-12 {
        return Err(Error::DegenerateOrientation);
    }
    Ok(sigma_phase / config.scale_factor())
}

fn expect_domain(psd: &PowerSpectralDensity, expected: NoiseDomain) -> Result<()> {
    if psd.domain == expected {
        Ok(())
    } else {
        Err(Error::DomainMismatch {
            expected: expected.name(),
            found: psd.domain.name(),
        })
    }
}

/// ∫ c f^p S(f) |H(f)|² df over the band, split at every zero of H.
fn propagate(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    options: &VarianceOptions,
    weight_coeff: f64,
    weight_exp: f64,
) -> Result<VarianceResult> {
    config.validate()?;
    let band = options.band.unwrap_or_else(|| Band::default_for(config));
    if !(band.f_min >= 0.0 && band.f_max.is_finite() && band.f_max > band.f_min) {
        return Err(invalid("noise.band", "need 0 <= f_min < f_max < inf"));
    }
    if !(options.rel_tol > 0.0) {
        return Err(invalid("noise.rel_tol", "must be > 0"));
    }
    if psd.is_zero() {
        return Ok(VarianceResult {
            value: 0.0,
            error_estimate: 0.0,
            band,
            convention: CONVENTION.into(),
            infrared_share: 0.0,
            evaluations: 0,
        });
    }

    let integrand = |f: f64| {
        if f == 0.0 {
            return 0.0;
        }
        let w = if weight_exp == 0.0 {
            weight_coeff
        } else {
            weight_coeff * f.powf(weight_exp)
        };
        w * psd.value(f) * transfer_power(f, config)
    };

    let breakpoints = breakpoints(config, psd.lines(), band);
    if band.f_min == 0.0 {
        check_infrared(&integrand, breakpoints[1])?;
    }

    let total = integrate_panels(&integrand, &breakpoints, options.rel_tol);
    if let Some((lower, upper)) = total.first_nonfinite {
        return Err(Error::Divergent { lower, upper });
    }

    let ir_top = if band.f_min > 0.0 {
        (10.0 * band.f_min).min(band.f_max)
    } else {
        breakpoints[1]
    };
    let ir_points: Vec<f64> = breakpoints
        .iter()
        .copied()
        .take_while(|&f| f < ir_top)
        .chain(std::iter::once(ir_top))
        .collect();
    let infrared = integrate_panels(&integrand, &ir_points, options.rel_tol);
    let infrared_share = if total.value > 0.0 {
        infrared.value / total.value
    } else {
        0.0
    };

    Ok(VarianceResult {
        value: total.value,
        error_estimate: total.error,
        band,
        convention: CONVENTION.into(),
        infrared_share,
        evaluations: total.evaluations,
    })
}

/// Integrand ∝ f^p near 0 with p ≤ −1 is not integrable down to f = 0.
fn check_infrared<F: Fn(f64) -> f64>(integrand: &F, first_panel_end: f64) -> Result<()> {
    let eps = 1e-9 * first_panel_end;
    let (a, b) = (integrand(eps), integrand(2.0 * eps));
    if !a.is_finite() {
        return Err(Error::Divergent {
            lower: 0.0,
            upper: first_panel_end,
        });
    }
    if a > 0.0 && b > 0.0 {
        let slope = (b / a).log2();
        if slope <= -1.0 + 1e-3 {
            return Err(Error::Divergent {
                lower: 0.0,
                upper: first_panel_end,
            });
        }
    }
    Ok(())
}

fn breakpoints(config: &InterferometerConfig, lines: &[SpectralLine], band: Band) -> Vec<f64> {
    let mut bp = vec![band.f_min];
    let zeros = transfer_zeros(config, band.f_min, band.f_max);
    let first = zeros.first().copied().unwrap_or(band.f_max).min(band.f_max);
    if band.f_min > 0.0 {
        let mut f = band.f_min * 10.0;
        while f < first {
            bp.push(f);
            f *= 10.0;
        }
    }
    bp.extend(zeros.iter().copied().filter(|&f| f < band.f_max));
    for l in lines {
        for k in -8..=8 {
            let f = l.center + k as f64 * l.width;
            if f > band.f_min && f < band.f_max {
                bp.push(f);
            }
        }
    }
    bp.push(band.f_max);
    bp.sort_by(f64::total_cmp);
    bp.dedup();
    bp
}

/// Direct adaptive integral of S·|H|² (no zero splitting); for diagnostics.
pub fn phase_variance_unsplit(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    band: Band,
    rel_tol: f64,
) -> f64 {
    integrate(
        &|f: f64| psd.value(f) * transfer_power(f, config),
        band.f_min,
        band.f_max,
        rel_tol,
    )
    .value
}
