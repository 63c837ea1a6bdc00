//! Long-term stability: projection-noise Allan deviation, the harmonic-sum
//! (Dick-type) Allan variance, mission feasibility and reference rates.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interferometer::{
    guide_radius_for, shot_noise_sensitivity, transfer_power, InterferometerConfig,
};
use crate::noise::{NoiseDomain, PowerSpectralDensity};
use crate::quadrature::integrate;
use crate::units::{ARCSECOND, EARTH_RATE, YEAR};

/// Rotation-rate resolution needed to measure the geodetic precession to 5 % (rad/s).
pub const GEODETIC_TARGET: f64 = 5.2e-14;

/// Search bracket for the minimum interrogation time (s).
pub const MISSION_BRACKET: (f64, f64) = (1e-2, 1e3);

const DICK_CHUNK: usize = 4096;

/// Hypotheses behind an Allan or mission number, reported with every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumptions {
    pub sin_latitude: f64,
    pub launch_speed: f64,
    pub launch_over_recoil: f64,
    pub dead_time: f64,
    pub atom_number: f64,
    pub contrast: f64,
    pub squeezing: f64,
    pub interrogation_time: f64,
    pub pulse_duration: f64,
    pub guide_radius: f64,
    pub n_loops: u32,
}

impl Assumptions {
    pub fn of(config: &InterferometerConfig) -> Self {
        Self {
            sin_latitude: config.latitude.sin(),
            launch_speed: config.launch_speed,
            launch_over_recoil: config.launch_over_recoil(),
            dead_time: config.dead_time,
            atom_number: config.atom_number,
            contrast: config.contrast,
            squeezing: config.squeezing,
            interrogation_time: config.interrogation_time,
            pulse_duration: config.pulse_duration,
            guide_radius: config.guide_radius,
            n_loops: config.n_loops,
        }
    }
}

/// σ_Ω(τ_I) = δΩ·√(T_c/τ_I) for τ_I ≥ T_c.
pub fn projection_allan(config: &InterferometerConfig, integration_time: f64) -> Result<f64> {
    let cycle = config.cycle_time();
    if !(integration_time.is_finite() && integration_time >= cycle) {
        return Err(Error::InvalidAveraging {
            tau: integration_time,
            cycle,
        });
    }
    Ok(shot_noise_sensitivity(config)? * (cycle / integration_time).sqrt())
}

/// White-noise Allan law σ(τ) = c/√τ, with c in rad s⁻¹ √s. Unlike
/// [`projection_allan`] it can be evaluated below one cycle, which is how
/// the "per √s" coefficient is quoted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteAllanLaw {
    pub coefficient: f64,
}

impl WhiteAllanLaw {
    pub fn projection(config: &InterferometerConfig) -> Result<Self> {
        Ok(Self {
            coefficient: shot_noise_sensitivity(config)? * config.cycle_time().sqrt(),
        })
    }

    pub fn at(&self, integration_time: f64) -> f64 {
        self.coefficient / integration_time.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllanModel {
    Projection,
    DickSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllanCurve {
    /// (τ_I in s, σ_Ω in rad/s), τ_I strictly increasing.
    pub points: Vec<(f64, f64)>,
    pub model: AllanModel,
    pub assumptions: Assumptions,
    pub config: InterferometerConfig,
}

fn check_tau_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() || taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(
            "allan.tau",
            "averaging times must be non-empty and strictly increasing",
        ));
    }
    Ok(())
}

pub fn projection_allan_curve(config: &InterferometerConfig, taus: &[f64]) -> Result<AllanCurve> {
    check_tau_grid(taus)?;
    let points = taus
        .iter()
        .map(|&t| projection_allan(config, t).map(|s| (t, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AllanCurve {
        points,
        model: AllanModel::Projection,
        assumptions: Assumptions::of(config),
        config: config.clone(),
    })
}

pub fn dick_sum_curve(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    taus: &[f64],
    m_max: u64,
) -> Result<AllanCurve> {
    check_tau_grid(taus)?;
    let points = taus
        .par_iter()
        .map(|&t| dick_sum_allan(psd, config, t, m_max).map(|r| (t, r.value)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AllanCurve {
        points,
        model: AllanModel::DickSum,
        assumptions: Assumptions::of(config),
        config: config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DickSumResult {
    /// σ_Ω (rad/s).
    pub value: f64,
    /// σ_Ω² of the partial sum ((rad/s)²).
    pub variance: f64,
    pub m_max: u64,
    /// Upper estimate of the omitted terms m > m_max, in variance units.
    pub tail_bound: f64,
    /// Relative change over the last decade of m below 10⁻⁴.
    pub converged: bool,
}

/// σ_Ω²(τ_I) = (1/S)²·(4π/τ_I)·Σ_{m≥1} (2k_eff R)²/[2πm/(2T)]²·|H(m/T)|²·S_Ω(m/T),
/// S the scale factor dΦ/dΩ.
pub fn dick_sum_allan(
    psd: &PowerSpectralDensity,
    config: &InterferometerConfig,
    integration_time: f64,
    m_max: u64,
) -> Result<DickSumResult> {
    if psd.domain != NoiseDomain::Rotation {
        return Err(Error::DomainMismatch {
            expected: NoiseDomain::Rotation.name(),
            found: psd.domain.name(),
        });
    }
    if m_max < 1 {
        return Err(invalid("allan.m_max", "must be >= 1"));
    }
    config.validate()?;
    if config.latitude.sin().abs() < 1e-12 {
        return Err(Error::DegenerateOrientation);
    }
    let cycle = config.cycle_time();
    if !(integration_time.is_finite() && integration_time >= cycle) {
        return Err(Error::InvalidAveraging {
            tau: integration_time,
            cycle,
        });
    }

    let prefactor = config.scale_factor().powi(-2) * 4.0 * PI / integration_time;
    let two_t = config.interrogation_time;
    let half = config.half_time();
    let w = (2.0 * config.effective_wavevector() * config.guide_radius).powi(2);
    let term = |m: f64| {
        let f = m / half;
        w / (2.0 * PI * m / two_t).powi(2) * transfer_power(f, config) * psd.value(f)
    };

    let partial = |upper: u64| -> f64 {
        let n_chunks = upper.div_ceil(DICK_CHUNK as u64);
        let chunks: Vec<f64> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * DICK_CHUNK as u64 + 1;
                let hi = ((c + 1) * DICK_CHUNK as u64).min(upper);
                (lo..=hi).map(|m| term(m as f64)).sum::<f64>()
            })
            .collect();
        chunks.iter().sum()
    };

    let decade = (m_max / 10).max(1);
    let s_decade = partial(decade);
    let s_full = s_decade
        + if m_max > decade {
            partial_range(&term, decade + 1, m_max)
        } else {
            0.0
        };
    let converged = if s_full == 0.0 {
        true
    } else {
        m_max >= 10 && (s_full - s_decade).abs() / s_full < 1e-4
    };

    // |H|² ≤ 4/(πfτ)² caps the tail envelope; integrate it in u = m_max/m.
    let tau = config.pulse_duration;
    let envelope = |m: f64| {
        let f = m / half;
        let h2 = (4.0 / (PI * f * tau).powi(2)).min(4.0);
        w / (2.0 * PI * m / two_t).powi(2) * h2 * psd.value(f)
    };
    let m0 = m_max as f64 + 0.5;
    let tail_sum = integrate(
        &|u: f64| {
            if u <= 0.0 {
                0.0
            } else {
                m0 / (u * u) * envelope(m0 / u)
            }
        },
        0.0,
        1.0,
        1e-8,
    )
    .value;

    let variance = prefactor * s_full;
    Ok(DickSumResult {
        value: variance.sqrt(),
        variance,
        m_max,
        tail_bound: prefactor * tail_sum,
        converged,
    })
}

fn partial_range<F: Fn(f64) -> f64 + Sync>(term: &F, lo: u64, hi: u64) -> f64 {
    let n = hi - lo + 1;
    let n_chunks = n.div_ceil(DICK_CHUNK as u64);
    let chunks: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let a = lo + c * DICK_CHUNK as u64;
            let b = (a + DICK_CHUNK as u64 - 1).min(hi);
            (a..=b).map(|m| term(m as f64)).sum::<f64>()
        })
        .collect();
    chunks.iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPoint {
    /// Minimum interrogation time 2T (s).
    pub interrogation_time: f64,
    /// m
    pub guide_radius: f64,
    pub launch_speed: f64,
    /// σ_Ω at that 2T over the integration time (rad/s).
    pub achieved_sigma: f64,
}

fn mission_config(
    template: &InterferometerConfig,
    two_t: f64,
    launch_speed: f64,
) -> InterferometerConfig {
    InterferometerConfig {
        interrogation_time: two_t,
        launch_speed,
        guide_radius: guide_radius_for(two_t, launch_speed, template.n_loops),
        ..template.clone()
    }
}

/// Smallest 2T with projection_allan(2T, v) ≤ target over `integration_time`,
/// by bisection in log 2T to `rel_tol`.
pub fn required_interrogation_time(
    target_sigma: f64,
    integration_time: f64,
    launch_speed: f64,
    template: &InterferometerConfig,
    rel_tol: f64,
) -> Result<MissionPoint> {
    if !(target_sigma > 0.0 && target_sigma.is_finite()) {
        return Err(invalid("mission.target_sigma", "must be finite and > 0"));
    }
    if !(launch_speed > 0.0 && launch_speed.is_finite()) {
        return Err(invalid("mission.launch_speed", "must be finite and > 0"));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid("mission.rel_tol", "must lie in (0, 1)"));
    }
    let (mut lo, bracket_hi) = MISSION_BRACKET;
    lo = lo.max(template.pulse_duration * 1.000_001);
    let hi_limit = bracket_hi.min(integration_time - template.dead_time);
    if !(hi_limit > lo) {
        return Err(invalid(
            "mission.integration_time",
            "shorter than the smallest admissible cycle",
        ));
    }
    let sigma = |two_t: f64| {
        projection_allan(
            &mission_config(template, two_t, launch_speed),
            integration_time,
        )
    };

    let floor = sigma(hi_limit)?;
    if floor > target_sigma {
        return Err(Error::Infeasible {
            target: target_sigma,
            achieved: floor,
        });
    }
    let mut hi = hi_limit;
    if sigma(lo)? <= target_sigma {
        hi = lo;
    }
    while hi / lo - 1.0 > rel_tol {
        let mid = (lo * hi).sqrt();
        if sigma(mid)? <= target_sigma {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let cfg = mission_config(template, hi, launch_speed);
    Ok(MissionPoint {
        interrogation_time: hi,
        guide_radius: cfg.guide_radius,
        launch_speed,
        achieved_sigma: projection_allan(&cfg, integration_time)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityBoundary {
    /// (v_launch in m/s, min 2T in s, R in m), v increasing.
    pub points: Vec<(f64, f64, f64)>,
    pub target_sigma: f64,
    pub integration_time: f64,
    pub assumptions: Assumptions,
}

pub fn feasibility_boundary(
    target_sigma: f64,
    integration_time: f64,
    launch_speeds: &[f64],
    template: &InterferometerConfig,
    rel_tol: f64,
) -> Result<FeasibilityBoundary> {
    if launch_speeds.is_empty() || launch_speeds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(
            "mission.launch_speeds",
            "must be non-empty and strictly increasing",
        ));
    }
    let points = launch_speeds
        .par_iter()
        .map(|&v| {
            required_interrogation_time(target_sigma, integration_time, v, template, rel_tol)
                .map(|p| (v, p.interrogation_time, p.guide_radius))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeasibilityBoundary {
        points,
        target_sigma,
        integration_time,
        assumptions: Assumptions::of(template),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenonRate {
    pub name: String,
    /// rad/s
    pub rate: f64,
    pub rate_relative_to_earth: f64,
}

impl PhenomenonRate {
    fn new(name: &str, rate: f64) -> Self {
        Self {
            name: name.into(),
            rate,
            rate_relative_to_earth: rate / EARTH_RATE,
        }
    }
}

/// Reference rotation rates. Angles per year use the Julian year; a
/// milliarcsecond is read as an angle (4.848e-9 rad).
pub fn phenomenon_rates() -> Vec<PhenomenonRate> {
    let geodetic = 6.6 * ARCSECOND / YEAR;
    vec![
        PhenomenonRate::new("earth_rotation", EARTH_RATE),
        PhenomenonRate::new("geodetic_precession", geodetic),
        PhenomenonRate::new("geodetic_precession_5_percent", 0.05 * geodetic),
        PhenomenonRate::new("lense_thirring", 33e-3 * ARCSECOND / YEAR),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::species_rb87;

    fn allan_config() -> InterferometerConfig {
        let rb = species_rb87();
        let v = 2.0 * rb.recoil_velocity;
        InterferometerConfig::from_interrogation_time(rb, 20e-6, 10.0, 1, v)
            .unwrap()
            .with_atom_number(1e5)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn projection_scaling() {
        let c = allan_config();
        let s10 = projection_allan(&c, 10.0).unwrap();
        assert_eq!(s10, shot_noise_sensitivity(&c).unwrap());
        assert!(rel(projection_allan(&c, 40.0).unwrap(), 0.5 * s10) < 1e-14);
        assert_eq!(
            projection_allan(&c, 5.0),
            Err(Error::InvalidAveraging {
                tau: 5.0,
                cycle: 10.0
            })
        );
    }

    #[test]
    fn white_law_ratio() {
        let law = WhiteAllanLaw::projection(&allan_config()).unwrap();
        assert!(rel(law.at(1.0) / law.at(YEAR), YEAR.sqrt()) < 1e-12);
        assert!(
            rel(
                law.at(10.0),
                projection_allan(&allan_config(), 10.0).unwrap()
            ) < 1e-14
        );
    }

    #[test]
    fn curve_is_white() {
        let taus: Vec<f64> = (1..=6).map(|i| 10f64.powi(i)).collect();
        let curve = projection_allan_curve(&allan_config(), &taus).unwrap();
        let c0 = curve.points[0].1 * curve.points[0].0.sqrt();
        for &(t, s) in &curve.points {
            assert!(s > 0.0 && s.is_finite());
            assert!(rel(s * t.sqrt(), c0) < 1e-6);
        }
        assert_eq!(curve.model, AllanModel::Projection);
        assert_eq!(curve.assumptions.atom_number, 1e5);
        assert!(projection_allan_curve(&allan_config(), &[100.0, 50.0]).is_err());
    }

    fn fig21() -> InterferometerConfig {
        let rb = species_rb87();
        let v = 2.0 * rb.recoil_velocity;
        InterferometerConfig::from_interrogation_time(rb, 20e-6, 4.0, 1, v).unwrap()
    }

    #[test]
    fn dick_zero_psd() {
        let r = dick_sum_allan(
            &PowerSpectralDensity::zero(NoiseDomain::Rotation),
            &fig21(),
            10.0,
            1000,
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn dick_inverse_tau_scaling() {
        let c = fig21();
        let psd = PowerSpectralDensity::white(NoiseDomain::Rotation, 1e-16).unwrap();
        let v: Vec<f64> = [4.0, 40.0, 400.0]
            .iter()
            .map(|&t| dick_sum_allan(&psd, &c, t, 2000).unwrap().variance * t)
            .collect();
        assert!(rel(v[1], v[0]) < 1e-12 && rel(v[2], v[0]) < 1e-12);
    }

    #[test]
    fn dick_convergence_needs_m_beyond_t_over_tau() {
        // White S_Ω: terms are flat until m ≈ T/τ = 10⁵, then fall as m⁻⁴.
        let c = fig21();
        let psd = PowerSpectralDensity::white(NoiseDomain::Rotation, 1e-16).unwrap();
        let a = dick_sum_allan(&psd, &c, 4.0, 10_000).unwrap();
        let b = dick_sum_allan(&psd, &c, 4.0, 100_000).unwrap();
        assert!(!a.converged && !b.converged);
        let d = dick_sum_allan(&psd, &c, 4.0, 10_000_000).unwrap();
        assert!(d.converged);
        assert!(d.tail_bound < 1e-4 * d.variance);
        assert!(d.tail_bound > 0.0);
    }

    #[test]
    fn dick_sum_against_direct_loop() {
        let c = fig21();
        let psd =
            PowerSpectralDensity::power_law(NoiseDomain::Rotation, 1e-16, 1e-17, 0.0).unwrap();
        let r = dick_sum_allan(&psd, &c, 8.0, 5000).unwrap();
        let s = c.scale_factor();
        let k = c.effective_wavevector();
        let mut direct = 0.0;
        for m in 1..=5000u32 {
            let m = m as f64;
            let f = m / 2.0;
            direct += (4.0 * (k / 2.0) * c.guide_radius).powi(2) / (2.0 * PI * m / 4.0).powi(2)
                * transfer_power(f, &c)
                * psd.value(f);
        }
        direct *= 4.0 * PI / 8.0 / (s * s);
        assert!(
            rel(r.variance, direct) < 1e-10,
            "{} vs {direct}",
            r.variance
        );
    }

    #[test]
    fn dick_and_projection_share_white_slope() {
        let c = fig21();
        let psd = PowerSpectralDensity::white(NoiseDomain::Rotation, 1e-16).unwrap();
        let taus = [10.0, 100.0, 1000.0];
        let d = dick_sum_curve(&psd, &c, &taus, 1000).unwrap();
        let p = projection_allan_curve(&c, &taus).unwrap();
        for curve in [&d, &p] {
            let slope = (curve.points[2].1 / curve.points[0].1).ln() / (taus[2] / taus[0]).ln();
            assert!((slope + 0.5).abs() < 5e-3, "{slope}");
        }
    }

    #[test]
    fn dick_errors() {
        let c = fig21();
        let phase = PowerSpectralDensity::white(NoiseDomain::Phase, 1.0).unwrap();
        assert!(matches!(
            dick_sum_allan(&phase, &c, 10.0, 10),
            Err(Error::DomainMismatch { .. })
        ));
        let rot = PowerSpectralDensity::white(NoiseDomain::Rotation, 1.0).unwrap();
        assert!(dick_sum_allan(&rot, &c, 10.0, 0).is_err());
        assert!(matches!(
            dick_sum_allan(&rot, &c, 1.0, 10),
            Err(Error::InvalidAveraging { .. })
        ));
    }

    fn mission_template() -> InterferometerConfig {
        allan_config()
    }

    #[test]
    fn mission_self_consistency() {
        let t = mission_template();
        let v = 4.0 * t.species.recoil_velocity;
        let known = projection_allan(&mission_config(&t, 7.0, v), YEAR).unwrap();
        let p = required_interrogation_time(known, YEAR, v, &t, 1e-6).unwrap();
        assert!(rel(p.interrogation_time, 7.0) < 1e-3);
        assert!(p.achieved_sigma <= known);
        assert!(rel(p.guide_radius, guide_radius_for(p.interrogation_time, v, 1)) < 1e-15);
    }

    #[test]
    fn mission_monotone_in_speed() {
        let t = mission_template();
        let vr = t.species.recoil_velocity;
        let speeds: Vec<f64> = (1..=12).map(|i| i as f64 * vr).collect();
        for tol in [1e-3, 1e-6] {
            let b = feasibility_boundary(GEODETIC_TARGET, YEAR, &speeds, &t, tol).unwrap();
            assert!(b.points.windows(2).all(|w| w[1].1 < w[0].1));
        }
    }

    #[test]
    fn mission_infeasible() {
        let t = mission_template();
        let v = t.species.recoil_velocity;
        match required_interrogation_time(1e-30, YEAR, v, &t, 1e-3) {
            Err(Error::Infeasible { target, achieved }) => {
                assert_eq!(target, 1e-30);
                assert!(achieved > target);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn phenomena() {
        let p = phenomenon_rates();
        assert_eq!(p[0].rate, 7.29e-5);
        assert_eq!(p[0].rate_relative_to_earth, 1.0);
        // 6.6″ = 6.6·4.848e-6 rad spread over 3.156e7 s.
        assert!(rel(p[1].rate, 6.6 * 4.848e-6 / 3.156e7) < 1e-3);
        assert!(rel(p[3].rate / p[1].rate, 5e-3) < 1e-12);
        for r in &p {
            assert_eq!(r.rate_relative_to_earth, r.rate / EARTH_RATE);
        }
    }
}
