//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! `CHIPGYRO_BLESS=1` rewrites the pinned guide values in `tests/golden/`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use chipgyro_core::guide::{
    characterize_guide, find_guide_minimum, modulated_roughness_average, roughness_potential,
    CorrugationModel, CurrentWaveform, GuideCharacterization,
};
use chipgyro_core::interferometer::{
    corner_frequencies, fringe_population, interrogation_time_for, sensitivity_function_g,
    sensitivity_report, transfer_function, transfer_power, InterferometerConfig,
    PARIS_LATITUDE_DEG,
};
use chipgyro_core::magnetostatics::{loop_field, loop_field_oracle, GuideGeometry, WireLoop};
use chipgyro_core::noise::{
    phase_variance, phase_variance_with, Band, NoiseDomain, PowerLawTerm, PowerSpectralDensity,
    SpectralLine, VarianceOptions,
};
use chipgyro_core::stability::{
    dick_sum_allan, feasibility_boundary, required_interrogation_time, WhiteAllanLaw,
    GEODETIC_TARGET,
};
use chipgyro_core::units::{species_rb87, YEAR};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

/// Outcome of one sub-check inside a criterion.
struct Check {
    label: String,
    ok: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.0.push(Check {
            label: label.into(),
            ok,
        });
    }

    fn within(&mut self, label: &str, value: f64, lo: f64, hi: f64) {
        self.check(
            format!("{label} = {value:.6e} in [{lo:.4e}, {hi:.4e}]"),
            value >= lo && value <= hi,
        );
    }

    fn rel(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        let r = (value - target).abs() / target.abs();
        self.check(
            format!("{label} = {value:.9e} vs {target:.9e} (rel {r:.2e} < {tol:.0e})"),
            r < tol,
        );
    }
}

fn launch_2vr(tau: f64, two_t: f64) -> InterferometerConfig {
    let rb = species_rb87();
    let v = 2.0 * rb.recoil_velocity;
    InterferometerConfig::from_interrogation_time(rb, tau, two_t, 1, v).unwrap()
}

fn criterion_1(c: &mut Checks) {
    let cfg = launch_2vr(20e-6, 4.0);
    let (hp, lp) = corner_frequencies(&cfg);
    c.rel("f_HP [Hz]", hp, 15.915e3, 1e-4);
    c.rel("f_LP [Hz]", lp, 0.07958, 1e-4);
    c.check(
        format!("f_LP rounds to 0.1 Hz ({lp:.4})"),
        format!("{lp:.1}") == "0.1",
    );
    let peak = (1..200_000)
        .map(|i| transfer_function(i as f64 * 0.2503, &cfg).norm())
        .fold(0.0, f64::max);
    let worst = (1..=5)
        .flat_map(|n| [n as f64 / 20e-6, n as f64 / (4.0 - 20e-6)])
        .map(|f| transfer_function(f, &cfg).norm() / peak)
        .fold(0.0, f64::max);
    c.check(
        format!("max |H(zero)|/|H|max = {worst:.2e} < 1e-12"),
        worst < 1e-12,
    );
}

fn criterion_2(c: &mut Checks) {
    let rb = species_rb87();
    let cfg = launch_2vr(20e-6, 3.0).with_latitude_deg(PARIS_LATITUDE_DEG);
    let r = sensitivity_report(&cfg).unwrap();
    c.rel("δΩ [rad/s]", r.per_shot, 3.4e-8, 0.1);
    c.rel("ARW [°/√h]", r.arw_per_shot_reading, 1.1e-4, 0.1);
    // 2T = πR/v_r for one loop.
    let r1 = 3.0 * rb.recoil_velocity / PI;
    c.rel("single-loop R [m]", cfg.guide_radius, r1, 1e-12);
    c.check(
        format!("R = {:.3e} m is 6 mm at one figure", cfg.guide_radius),
        (cfg.guide_radius * 1e3).round() == 6.0,
    );
    c.rel("R at 2 figures [m]", cfg.guide_radius, 5.6e-3, 0.01);
    let t10 = interrogation_time_for(600e-6, 2.0 * rb.recoil_velocity, 10);
    c.rel("10-loop 2T [s]", t10, 3.0, 0.1);
}

fn allan_config() -> InterferometerConfig {
    launch_2vr(20e-6, 10.0).with_atom_number(1e5)
}

fn criterion_3(c: &mut Checks) {
    let law = WhiteAllanLaw::projection(&allan_config()).unwrap();
    c.within(
        "coefficient [rad s^-1 √s]",
        law.coefficient,
        1.9e-9 / 2.0,
        1.9e-9 * 2.0,
    );
    c.within(
        "12-month σ [rad/s]",
        law.at(YEAR),
        3.5e-13 / 2.0,
        3.5e-13 * 2.0,
    );
    c.rel(
        "σ(1 s)/σ(1 yr)",
        law.at(1.0) / law.at(YEAR),
        YEAR.sqrt(),
        1e-6,
    );
}

fn criterion_4(c: &mut Checks) {
    let template = allan_config();
    let vr = template.species.recoil_velocity;
    let p = required_interrogation_time(GEODETIC_TARGET, YEAR, 4.0 * vr, &template, 1e-6).unwrap();
    c.within("min 2T at 4v_r [s]", p.interrogation_time, 4.5, 18.0);
    c.within("R at 4v_r [m]", p.guide_radius, 18e-3, 74e-3);
    let speeds: Vec<f64> = (1..=48).map(|i| 0.25 * i as f64 * vr).collect();
    let b = feasibility_boundary(GEODETIC_TARGET, YEAR, &speeds, &template, 1e-6).unwrap();
    let monotone = b.points.windows(2).all(|w| w[1].1 < w[0].1);
    c.check(
        format!("boundary strictly decreasing over {} speeds", speeds.len()),
        monotone,
    );
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/guide_reference.json")
}

fn criterion_5(c: &mut Checks) {
    let g = GuideGeometry::reference_design();
    let ch =
        characterize_guide(&g, &species_rb87(), chipgyro_core::guide::DEFAULT_OFFSET_B0).unwrap();
    c.rel("height [m]", ch.min_position.1 - g.height(), 13e-6, 0.2);
    c.within("depth [K]", ch.depth_temperature, 100e-6, 900e-6);
    c.within("radial frequency [Hz]", ch.radial_frequency, 500.0, 4500.0);

    let path = golden_path();
    if std::env::var_os("CHIPGYRO_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&ch).unwrap() + "\n").unwrap();
    }
    match std::fs::read_to_string(&path) {
        Ok(text) => {
            let golden: GuideCharacterization = serde_json::from_str(&text).unwrap();
            for (label, v, g) in [
                ("golden rho0", ch.min_position.0, golden.min_position.0),
                ("golden z0", ch.min_position.1, golden.min_position.1),
                ("golden gradient", ch.gradient, golden.gradient),
                (
                    "golden radial frequency",
                    ch.radial_frequency,
                    golden.radial_frequency,
                ),
                (
                    "golden depth",
                    ch.depth_temperature,
                    golden.depth_temperature,
                ),
            ] {
                c.rel(label, v, g, 1e-6);
            }
        }
        Err(e) => c.check(
            format!("golden file {} readable: {e}", path.display()),
            false,
        ),
    }
}

fn criterion_6(c: &mut Checks) {
    let a = 1e-3;
    let wire = WireLoop::new(a, 0.1, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 100 {
        let rho = rng.gen_range(0.0..2.0 * a);
        let z = rng.gen_range(-a..a);
        if (rho - a).hypot(z) < 0.1 * a {
            continue;
        }
        let exact = loop_field(&wire, rho, z).unwrap();
        let bs = loop_field_oracle(&wire, rho, z, 100_000).unwrap();
        let err = (exact.b_rho - bs.b_rho).hypot(exact.b_z - bs.b_z) / exact.modulus();
        worst = worst.max(err);
        n += 1;
    }
    c.check(
        format!("worst relative error over 100 points = {worst:.2e} < 1e-6"),
        worst < 1e-6,
    );

    let (rho, z) = (0.6 * a, 0.3 * a);
    let exact = loop_field(&wire, rho, z).unwrap();
    let err = |n: usize| {
        let bs = loop_field_oracle(&wire, rho, z, n).unwrap();
        (exact.b_rho - bs.b_rho).hypot(exact.b_z - bs.b_z)
    };
    let ns = [250usize, 500, 1000, 2000, 4000];
    let errs: Vec<f64> = ns.iter().map(|&n| err(n)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let mean = orders.iter().sum::<f64>() / orders.len() as f64;
    c.check(
        format!("observed order {mean:.4} ≈ 2"),
        (mean - 2.0).abs() < 0.05,
    );
}

/// Time-domain output variance for a random-phase realisation of
/// S(f) = h·f^α on [f_lo, f_hi], averaged over every start time of a
/// periodic record; the interferometer output is the difference of the
/// phase averaged over the two pulses.
fn parseval_pair(alpha: f64, seed: u64) -> (f64, f64) {
    let (fs, n) = (20_000.0, 1usize << 21);
    let (tau, two_t) = (10e-3, 1.0);
    let (f_lo, f_hi) = (0.2, 1000.0);
    let h = 1e-8;
    let df = fs / n as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    let k_lo = (f_lo / df).ceil() as usize;
    let k_hi = (f_hi / df).floor() as usize;
    for k in k_lo..=k_hi {
        // Trapezoid weights, so the bin sum matches the band integral at the edges.
        let weight = if k == k_lo || k == k_hi { 0.5 } else { 1.0 };
        let amp = (2.0 * h * (k as f64 * df).powf(alpha) * df * weight).sqrt();
        let z = Complex64::from_polar(0.5 * amp, rng.gen_range(0.0..2.0 * PI));
        spec[k] = z;
        spec[n - k] = z.conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);

    let m = (tau * fs).round() as usize;
    let gap = ((two_t - tau) * fs).round() as usize;
    let mut prefix = vec![0.0; 2 * n + 1];
    for i in 0..2 * n {
        prefix[i + 1] = prefix[i] + spec[i % n].re;
    }
    let window = |start: usize| (prefix[start + m] - prefix[start]) / m as f64;
    let time_var = (0..n)
        .map(|t| (window(t + gap) - window(t)).powi(2))
        .sum::<f64>()
        / n as f64;

    let cfg = launch_2vr(tau, two_t);
    let psd = PowerSpectralDensity::analytic(
        NoiseDomain::Phase,
        vec![PowerLawTerm {
            coefficient: h,
            exponent: alpha,
        }],
        vec![],
    )
    .unwrap();
    let band = Band {
        f_min: k_lo as f64 * df,
        f_max: k_hi as f64 * df,
    };
    let freq_var = phase_variance_with(
        &psd,
        &cfg,
        &VarianceOptions {
            band: Some(band),
            rel_tol: 1e-9,
        },
    )
    .unwrap()
    .value;
    (time_var, freq_var)
}

fn criterion_7(c: &mut Checks) {
    for (name, alpha, seed) in [
        ("white", 0.0, 71),
        ("flicker", -1.0, 72),
        ("random walk", -2.0, 73),
    ] {
        let (t, f) = parseval_pair(alpha, seed);
        c.rel(&format!("Parseval {name}: time"), t, f, 0.01);
    }

    let cfg = launch_2vr(20e-6, 4.0);
    let k = cfg.effective_wavevector();
    let freqs: Vec<f64> = (0..60)
        .map(|i| 10f64.powf(-3.0 + 0.13 * i as f64))
        .collect();
    let values: Vec<f64> = freqs
        .iter()
        .map(|f| 1e-10 * (1.0 + 0.1 / f + 1e-3 / (f * f)))
        .collect();
    let tab = PowerSpectralDensity::tabulated(NoiseDomain::Phase, freqs.clone(), values).unwrap();
    let law = PowerSpectralDensity::power_law(NoiseDomain::Phase, 1e-10, 1e-11, 1e-13).unwrap();
    let mut worst: f64 = 0.0;
    for psd in [&tab, &law] {
        for via in [NoiseDomain::Acceleration, NoiseDomain::Rotation] {
            let back = psd
                .convert(via, k, cfg.guide_radius)
                .and_then(|p| p.convert(NoiseDomain::Phase, k, cfg.guide_radius))
                .unwrap();
            for &f in freqs.iter().chain([0.37, 123.0, 4.5e4].iter()) {
                worst = worst.max((back.value(f) - psd.value(f)).abs() / psd.value(f));
            }
        }
    }
    c.check(
        format!("domain round-trip worst {worst:.2e} < 1e-9"),
        worst < 1e-9,
    );

    let (hp, _) = corner_frequencies(&cfg);
    let line = |center: f64| {
        let psd = PowerSpectralDensity::analytic(
            NoiseDomain::Phase,
            vec![],
            vec![SpectralLine {
                center,
                width: 1.0,
                power: 1e-6,
            }],
        )
        .unwrap();
        phase_variance(&psd, &cfg).unwrap().value
    };
    let ratio = line(1.0 / cfg.pulse_duration) / line(hp);
    c.check(
        format!("line at 1/τ vs at f_HP: ratio {ratio:.2e} <= 1e-6"),
        ratio <= 1e-6,
    );
}

/// Composite Simpson rule, used as an independent Fourier-transform oracle.
fn simpson<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, n: usize) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

fn criterion_8(c: &mut Checks) {
    let cfg = launch_2vr(1e-3, 20e-3).with_contrast(0.8);
    let fringe_ok = (0..1000).all(|i| {
        let p = fringe_population(&cfg, -50.0 + 0.1 * i as f64).expected_population;
        (0.0..=cfg.atom_number).contains(&p)
    });
    c.check("fringe population within [0, N]", fringe_ok);

    let g = GuideGeometry::reference_design();
    let base = find_guide_minimum(&g).unwrap();
    let moved = [3.0, 0.25]
        .iter()
        .map(|&s| {
            let p = find_guide_minimum(&g.scaled(s)).unwrap();
            (p.0 - base.0).hypot(p.1 - base.1)
        })
        .fold(0.0, f64::max);
    c.check(
        format!("argmin shift under current scaling {moved:.2e} m < 1e-9 m"),
        moved < 1e-9,
    );

    let rb = species_rb87();
    let corr = CorrugationModel::generate(1e-7, 50e-6, 8, 2.0 * PI * 500e-6, 2048, 13e-6).unwrap();
    let plus = roughness_potential(&corr, 0.12, &rb).unwrap();
    let minus = roughness_potential(&corr, -0.12, &rb).unwrap();
    c.check(
        "roughness V(−I) = −V(I)",
        plus.iter().zip(&minus).all(|(a, b)| *a == -*b),
    );
    let peak = plus.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let avg = modulated_roughness_average(
        &corr,
        &CurrentWaveform::Sine {
            amplitude: 0.12,
            offset: 0.0,
        },
        &rb,
        64,
    )
    .unwrap();
    let residual = avg.potential.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / peak;
    c.check(
        format!("zero-mean modulation residual {residual:.2e} < 1e-12"),
        residual < 1e-12,
    );

    let half = cfg.half_time();
    let tau = cfg.pulse_duration;
    let mut worst: f64 = 0.0;
    for f in [3.0, 17.5, 49.0, 230.0, 1234.0] {
        let w = 2.0 * PI * f;
        let kernel = |t: f64| Complex64::from_polar(sensitivity_function_g(t, &cfg), -w * t);
        let gw = simpson(kernel, -half, -half + tau, 2000)
            + simpson(kernel, -half + tau, half - tau, 20000)
            + simpson(kernel, half - tau, half, 2000);
        let lhs = transfer_power(f, &cfg);
        worst = worst.max((lhs - w * w * gw.norm_sqr()).abs() / lhs);
    }
    c.check(
        format!("|H|² = ω²|G|² worst rel {worst:.2e} < 1e-6"),
        worst < 1e-6,
    );

    let once = || {
        let ch = characterize_guide(&g, &rb, 1e-2).unwrap();
        let psd = PowerSpectralDensity::power_law(NoiseDomain::Phase, 1e-10, 1e-11, 1e-13).unwrap();
        let var = phase_variance(&psd, &launch_2vr(20e-6, 4.0)).unwrap().value;
        let rot = PowerSpectralDensity::white(NoiseDomain::Rotation, 1e-16).unwrap();
        let dick = dick_sum_allan(&rot, &launch_2vr(20e-6, 4.0), 4.0, 200_000)
            .unwrap()
            .value;
        let rough = CorrugationModel::generate(1e-7, 50e-6, 9, 3e-3, 1024, 13e-6)
            .unwrap()
            .profile;
        let mut bits = vec![
            ch.min_position.0.to_bits(),
            ch.min_position.1.to_bits(),
            ch.radial_frequency.to_bits(),
            ch.depth_temperature.to_bits(),
            var.to_bits(),
            dick.to_bits(),
        ];
        bits.extend(rough.iter().map(|v| v.to_bits()));
        bits
    };
    c.check("bitwise-identical reruns", once() == once());
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, f64, fn(&mut Checks));
    let criteria: [Criterion; 8] = [
        (1, "transfer function", 1.0, criterion_1),
        (2, "shot-noise sensitivity", 1.0, criterion_2),
        (3, "Allan stability", 5.0, criterion_3),
        (4, "mission diagram", 10.0, criterion_4),
        (5, "guide characterization", 30.0, criterion_5),
        (6, "magnetostatics oracle", 30.0, criterion_6),
        (7, "noise propagation", 60.0, criterion_7),
        (8, "property suite", f64::INFINITY, criterion_8),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let mut checks = Checks::default();
        let start = Instant::now();
        run(&mut checks);
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < limit;
        let ok = in_time && checks.0.iter().all(|c| c.ok);
        let limit_text = if limit.is_finite() {
            format!(" / limit {limit} s")
        } else {
            String::new()
        };
        println!(
            "criterion {id} [{name}]: {} ({} checks, {secs:.2} s{limit_text})",
            if ok { "PASS" } else { "FAIL" },
            checks.0.len()
        );
        for c in checks
            .0
            .iter()
            .filter(|c| !c.ok || std::env::var_os("CHIPGYRO_VERBOSE").is_some())
        {
            println!("    {} {}", if c.ok { "ok  " } else { "FAIL" }, c.label);
        }
        if !in_time {
            println!("    FAIL runtime {secs:.2} s exceeds {limit} s");
        }
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
