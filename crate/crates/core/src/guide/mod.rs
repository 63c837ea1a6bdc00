//! Characterisation of the circular magnetic guide formed by the chip wires.
//!
//! The guide is the zero line of |B| above the chip. A longitudinal offset
//! B0 regularises the potential U = μ·√(|B|² + B0²) so that a harmonic
//! radial frequency exists; the depth is read from the bare DC modulus.

mod roughness;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::magnetostatics::{FieldSource, GuideGeometry};
use crate::units::{AtomSpecies, K_B};

pub use roughness::{
    modulated_roughness_average, roughness_potential, CorrugationModel, CurrentWaveform,
    RoughnessAverage, CORRUGATION_CONSTANT,
};

/// Default longitudinal offset field (T).
pub const DEFAULT_OFFSET_B0: f64 = 1e-2;

const COARSE_GRID: usize = 201;
const DEPTH_GRID: usize = 1001;
const HESSIAN_STEP: f64 = 1e-8;
const POSITION_TOL: f64 = 1e-10;
/// The minimum is a field zero when |B| there is below this fraction of |B|
/// one probe step away; a smooth minimum keeps the ratio near 1.
const ZERO_FIELD_RATIO: f64 = 1e-3;
/// Probe step as a fraction of the box height.
const ZERO_PROBE: f64 = 1e-3;

/// Rectangle of the (ρ, z) half-plane searched for the guide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub rho_min: f64,
    pub rho_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl SearchBox {
    /// ρ ∈ [0.5R, 1.5R], z ∈ (h, h + 10s] for central radius R and spacing s.
    pub fn for_geometry(geometry: &GuideGeometry) -> Self {
        let r = geometry.central_radius();
        let s = geometry.spacing();
        let h = geometry.height();
        Self {
            rho_min: 0.5 * r,
            rho_max: 1.5 * r,
            z_min: h + 1e-3 * 10.0 * s,
            z_max: h + 10.0 * s,
        }
    }

    fn contains(&self, rho: f64, z: f64) -> bool {
        rho >= self.rho_min && rho <= self.rho_max && z >= self.z_min && z <= self.z_max
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }

    fn rho_at(&self, n: usize, i: usize) -> f64 {
        Self::axis(self.rho_min, self.rho_max, n, i)
    }

    fn z_at(&self, n: usize, j: usize) -> f64 {
        Self::axis(self.z_min, self.z_max, n, j)
    }
}

/// Summary of the guide at its field minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuideCharacterization {
    /// (ρ₀, z₀) in m.
    pub min_position: (f64, f64),
    /// |B_DC| at the minimum (T).
    pub b_min: f64,
    /// Slope of |B| just outside the minimum along the stiff direction (T/m).
    pub gradient: f64,
    pub offset_b0: f64,
    /// From the largest Hessian eigenvalue of U (Hz).
    pub radial_frequency: f64,
    /// From the smallest Hessian eigenvalue of U (Hz).
    pub secondary_frequency: f64,
    /// Escape barrier of |B_DC| minus `b_min` (T).
    pub depth_field: f64,
    /// μ·depth_field/k_B (K).
    pub depth_temperature: f64,
    /// Relative disagreement between two stencils for ∂²U/∂ρ∂z.
    pub hessian_asymmetry: f64,
    pub search_box: SearchBox,
}

/// Locates the guide (minimum of |B| above the chip) for a wire geometry.
pub fn find_guide_minimum(geometry: &GuideGeometry) -> Result<(f64, f64)> {
    find_field_minimum(geometry, &SearchBox::for_geometry(geometry))
}

/// Coarse grid scan for interior strict local minima of |B|, each refined
/// with Nelder–Mead; the lowest wins, ties going to the smaller z.
pub fn find_field_minimum<S: FieldSource>(source: &S, search: &SearchBox) -> Result<(f64, f64)> {
    let n = COARSE_GRID;
    let grid = modulus_grid(source, search, n);
    let at = |i: usize, j: usize| grid[j * n + i];

    let mut candidates = Vec::new();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let v = at(i, j);
            if !v.is_finite() {
                continue;
            }
            let is_min = (-1i64..=1).all(|dj| {
                (-1i64..=1).all(|di| {
                    (di == 0 && dj == 0)
                        || v < at((i as i64 + di) as usize, (j as i64 + dj) as usize)
                })
            });
            if is_min {
                candidates.push((v, i, j));
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoGuide(format!(
            "no strict local minimum on the {n}x{n} scan (non-trapping currents?)"
        )));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    candidates.truncate(16);

    let cell_rho = (search.rho_max - search.rho_min) / (n - 1) as f64;
    let cell_z = (search.z_max - search.z_min) / (n - 1) as f64;
    let objective = |p: [f64; 2]| {
        if !search.contains(p[0], p[1]) {
            return f64::INFINITY;
        }
        source.modulus(p[0], p[1]).unwrap_or(f64::INFINITY)
    };

    let mut best: Option<(f64, f64, f64)> = None;
    for &(_, i, j) in &candidates {
        let start = [search.rho_at(n, i), search.z_at(n, j)];
        let (p, v) = nelder_mead(&objective, start, [cell_rho, cell_z], POSITION_TOL, 4000);
        let on_edge = p[0] - search.rho_min < cell_rho
            || search.rho_max - p[0] < cell_rho
            || p[1] - search.z_min < cell_z
            || search.z_max - p[1] < cell_z;
        if on_edge || !v.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((bv, _, bz)) => {
                let tie = (v - bv).abs() <= 1e-9 * v.max(bv);
                if tie {
                    p[1] < bz
                } else {
                    v < bv
                }
            }
        };
        if better {
            best = Some((v, p[0], p[1]));
        }
    }
    best.map(|(_, r, z)| (r, z)).ok_or_else(|| {
        Error::NoGuide("every local minimum refined onto the search-box edge".into())
    })
}

/// Full characterisation of a wire geometry.
pub fn characterize_guide(
    geometry: &GuideGeometry,
    species: &AtomSpecies,
    offset_b0: f64,
) -> Result<GuideCharacterization> {
    characterize_field(
        geometry,
        &SearchBox::for_geometry(geometry),
        species,
        offset_b0,
    )
}

/// Characterises any axisymmetric source inside `search`.
pub fn characterize_field<S: FieldSource>(
    source: &S,
    search: &SearchBox,
    species: &AtomSpecies,
    offset_b0: f64,
) -> Result<GuideCharacterization> {
    if !(offset_b0.is_finite() && offset_b0 >= 0.0) {
        return Err(invalid("offset_b0", "must be finite and >= 0"));
    }
    let (rho0, z0) = find_field_minimum(source, search)?;
    let b_min = source.modulus(rho0, z0)?;
    let probe = ZERO_PROBE * (search.z_max - search.z_min);
    if offset_b0 == 0.0 && b_min < ZERO_FIELD_RATIO * source.modulus(rho0, z0 + probe)? {
        return Err(Error::NonSmoothPotential);
    }

    let mu = species.magnetic_moment;
    let u_ref = b_min.hypot(offset_b0);
    // U(x) − U(x0) without cancellation.
    let delta_u = |dr: f64, dz: f64| -> Result<f64> {
        let b = source.modulus(rho0 + dr, z0 + dz)?;
        Ok(mu * (b - b_min) * (b + b_min) / (b.hypot(offset_b0) + u_ref))
    };
    let h = HESSIAN_STEP;
    let (upr, umr, upz, umz) = (
        delta_u(h, 0.0)?,
        delta_u(-h, 0.0)?,
        delta_u(0.0, h)?,
        delta_u(0.0, -h)?,
    );
    let (upp, upm, ump, umm) = (
        delta_u(h, h)?,
        delta_u(h, -h)?,
        delta_u(-h, h)?,
        delta_u(-h, -h)?,
    );
    let h_rr = (upr + umr) / (h * h);
    let h_zz = (upz + umz) / (h * h);
    let h_rz = (upp - upm - ump + umm) / (4.0 * h * h);
    let h_rz_alt = (upp + umm - upr - umr - upz - umz) / (2.0 * h * h);

    let mean = 0.5 * (h_rr + h_zz);
    let radius = (0.25 * (h_rr - h_zz).powi(2) + h_rz * h_rz).sqrt();
    let (lam_max, lam_min) = (mean + radius, mean - radius);
    let hessian_asymmetry = (h_rz - h_rz_alt).abs() / lam_max.abs().max(f64::MIN_POSITIVE);

    let freq = |lam: f64| (lam.max(0.0) / species.mass).sqrt() / (2.0 * PI);

    // Eigenvector of the stiff direction.
    let (mut ux, mut uz) = if h_rz.abs() > 1e-300 {
        (h_rz, lam_max - h_rr)
    } else if h_rr >= h_zz {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm = ux.hypot(uz);
    ux /= norm;
    uz /= norm;
    let d = 3.0 * h;
    let b_plus = source.modulus(rho0 + d * ux, z0 + d * uz)?;
    let b_minus = source.modulus(rho0 - d * ux, z0 - d * uz)?;
    let gradient = (b_plus + b_minus - 2.0 * b_min) / (2.0 * d);

    let barrier = escape_barrier(source, search, (rho0, z0))?;
    let depth_field = barrier - b_min;

    Ok(GuideCharacterization {
        min_position: (rho0, z0),
        b_min,
        gradient,
        offset_b0,
        radial_frequency: freq(lam_max),
        secondary_frequency: freq(lam_min),
        depth_field,
        depth_temperature: mu * depth_field / K_B,
        hessian_asymmetry,
        search_box: *search,
    })
}

/// Lowest |B| level at which a region grown from `start` first touches the
/// edge of the search box (minimax path, 4-connected flood on a fine grid).
pub fn escape_barrier<S: FieldSource>(
    source: &S,
    search: &SearchBox,
    start: (f64, f64),
) -> Result<f64> {
    let n = DEPTH_GRID;
    let grid = modulus_grid(source, search, n);
    let to_index = |v: f64, lo: f64, hi: f64| {
        (((v - lo) / (hi - lo)) * (n - 1) as f64)
            .round()
            .clamp(0.0, (n - 1) as f64) as usize
    };
    let i0 = to_index(start.0, search.rho_min, search.rho_max);
    let j0 = to_index(start.1, search.z_min, search.z_max);

    let mut visited = vec![false; n * n];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Level(grid[j0 * n + i0], j0 * n + i0)));
    while let Some(Reverse(Level(level, idx))) = heap.pop() {
        if visited[idx] {
            continue;
        }
        visited[idx] = true;
        let (i, j) = (idx % n, idx / n);
        if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            return Ok(level);
        }
        for (ni, nj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
            let nidx = nj * n + ni;
            if !visited[nidx] {
                heap.push(Reverse(Level(level.max(grid[nidx]), nidx)));
            }
        }
    }
    Err(Error::NoGuide(
        "flood fill never reached the search-box edge".into(),
    ))
}

/// U(ρ, z) = μ·√(|B|² + B0²) on an `n_rho` × `n_z` grid, rows ordered by z.
pub fn potential_map<S: FieldSource>(
    source: &S,
    search: &SearchBox,
    n_rho: usize,
    n_z: usize,
    species: &AtomSpecies,
    offset_b0: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    if n_rho < 2 || n_z < 2 {
        return Err(invalid("grid", "potential map needs at least 2x2 points"));
    }
    (0..n_z * n_rho)
        .into_par_iter()
        .map(|idx| {
            let rho = SearchBox::axis(search.rho_min, search.rho_max, n_rho, idx % n_rho);
            let z = SearchBox::axis(search.z_min, search.z_max, n_z, idx / n_rho);
            let b = source.modulus(rho, z)?;
            Ok((rho, z, species.magnetic_moment * b.hypot(offset_b0)))
        })
        .collect()
}

fn modulus_grid<S: FieldSource>(source: &S, search: &SearchBox, n: usize) -> Vec<f64> {
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            source
                .modulus(search.rho_at(n, idx % n), search.z_at(n, idx / n))
                .unwrap_or(f64::INFINITY)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Level(f64, usize);

impl PartialEq for Level {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Level {}
impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Level {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Derivative-free simplex minimisation in two dimensions.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(
    f: &F,
    start: [f64; 2],
    step: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> ([f64; 2], f64) {
    let mut pts = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut vals = pts.map(f);
    let lerp =
        |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.map(|k| pts[k]);
        vals = order.map(|k| vals[k]);

        let size = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .map(|(a, b)| (pts[a][0] - pts[b][0]).hypot(pts[a][1] - pts[b][1]))
            .fold(0.0, f64::max);
        if size < tol {
            break;
        }

        let centroid = [0.5 * (pts[0][0] + pts[1][0]), 0.5 * (pts[0][1] + pts[1][1])];
        let reflected = lerp(centroid, pts[2], -1.0);
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = lerp(centroid, pts[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
        } else {
            let contracted = if fr < vals[2] {
                lerp(centroid, reflected, 0.5)
            } else {
                lerp(centroid, pts[2], 0.5)
            };
            let fc = f(contracted);
            if fc < vals[2].min(fr) {
                pts[2] = contracted;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    pts[k] = lerp(pts[0], pts[k], 0.5);
                    vals[k] = f(pts[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (pts[best], vals[best])
}
