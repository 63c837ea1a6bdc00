//! Adaptive Gauss–Kronrod (7/15) quadrature over caller-supplied panels.
//!
//! Oscillatory integrands are handled by splitting at their zeros; each
//! panel is refined by bisection until its Kronrod–Gauss difference meets
//! the relative tolerance. Panels are processed in parallel chunks and
//! reduced in a fixed order, so results do not depend on thread count.

use rayon::prelude::*;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const CHUNK: usize = 1024;
const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Integral {
    pub value: f64,
    /// Sum of per-panel |Kronrod − Gauss| estimates.
    pub error: f64,
    pub evaluations: usize,
    /// First panel whose integrand was not finite, if any.
    pub first_nonfinite: Option<(f64, f64)>,
}

impl Integral {
    fn merge(mut self, other: Integral) -> Integral {
        self.value += other.value;
        self.error += other.error;
        self.evaluations += other.evaluations;
        self.first_nonfinite = self.first_nonfinite.or(other.first_nonfinite);
        self
    }
}

/// One 15-point Kronrod estimate with its embedded 7-point Gauss error.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
) -> Integral {
    let (value, error) = gauss_kronrod(f, a, b);
    let mut out = Integral {
        value,
        error,
        evaluations: 15,
        first_nonfinite: None,
    };
    if !value.is_finite() {
        out.first_nonfinite = Some((a, b));
        return out;
    }
    if error <= (rel_tol * value.abs()).max(abs_tol) || depth >= MAX_DEPTH {
        return out;
    }
    let m = 0.5 * (a + b);
    if m <= a || m >= b {
        return out;
    }
    adaptive(f, a, m, rel_tol, 0.5 * abs_tol, depth + 1).merge(adaptive(
        f,
        m,
        b,
        rel_tol,
        0.5 * abs_tol,
        depth + 1,
    ))
}

/// Adaptive integral of `f` over [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Integral {
    adaptive(f, a, b, rel_tol, 0.0, 0)
}

/// Adaptive integral over consecutive panels `[bp[i], bp[i+1]]`.
/// Breakpoints must be sorted; duplicates are skipped.
pub fn integrate_panels<F: Fn(f64) -> f64 + Sync>(
    f: &F,
    breakpoints: &[f64],
    rel_tol: f64,
) -> Integral {
    if breakpoints.len() < 2 {
        return Integral::default();
    }
    let panels: Vec<(f64, f64)> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1]))
        .collect();
    let partial: Vec<Integral> = panels
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk.iter().fold(Integral::default(), |acc, &(a, b)| {
                acc.merge(adaptive(f, a, b, rel_tol, 0.0, 0))
            })
        })
        .collect();
    partial
        .into_iter()
        .fold(Integral::default(), Integral::merge)
}
