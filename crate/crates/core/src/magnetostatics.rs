//! Static field of coaxial circular filaments.
//!
//! Loops share the z axis; by symmetry the field has no azimuthal component,
//! so everything is evaluated in the (ρ, z) half-plane.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::MU_0;

/// Points closer than this to a filament are treated as on the wire.
const FILAMENT_EPS: f64 = 1e-12;

/// Below this ratio ρ/√(a²+z²) the on-axis expansion replaces the elliptic form.
const NEAR_AXIS: f64 = 1e-3;

/// A filamentary circular loop coaxial with z. Positive current circulates
/// counterclockwise seen from +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireLoop {
    /// m
    pub radius: f64,
    /// A
    pub current: f64,
    /// z of the loop plane (m); the chip surface is z = 0.
    pub height: f64,
}

impl WireLoop {
    pub fn new(radius: f64, current: f64, height: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid(
                "loop.radius",
                format!("must be finite and > 0, got {radius}"),
            ));
        }
        if !current.is_finite() {
            return Err(invalid("loop.current", "must be finite"));
        }
        if !height.is_finite() {
            return Err(invalid("loop.height", "must be finite"));
        }
        Ok(Self {
            radius,
            current,
            height,
        })
    }

    fn distance_to_filament(&self, rho: f64, z: f64) -> f64 {
        (rho - self.radius).hypot(z - self.height)
    }
}

/// (B_ρ, B_z) at a point of the meridian half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldVector {
    /// T
    pub b_rho: f64,
    /// T
    pub b_z: f64,
    pub rho: f64,
    pub z: f64,
}

impl FieldVector {
    pub fn modulus(&self) -> f64 {
        self.b_rho.hypot(self.b_z)
    }

    fn add(self, other: FieldVector) -> FieldVector {
        FieldVector {
            b_rho: self.b_rho + other.b_rho,
            b_z: self.b_z + other.b_z,
            ..self
        }
    }
}

/// Anything that produces an axisymmetric static field.
pub trait FieldSource: Sync {
    fn field(&self, rho: f64, z: f64) -> Result<FieldVector>;

    fn modulus(&self, rho: f64, z: f64) -> Result<f64> {
        self.field(rho, z).map(|b| b.modulus())
    }
}

/// Concentric coplanar loops forming the guide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuideGeometry {
    pub loops: Vec<WireLoop>,
    pub label: String,
}

impl GuideGeometry {
    pub fn new(loops: Vec<WireLoop>, label: impl Into<String>) -> Result<Self> {
        if loops.is_empty() {
            return Err(invalid("geometry.loops", "at least one loop required"));
        }
        let h = loops[0].height;
        for (i, l) in loops.iter().enumerate() {
            WireLoop::new(l.radius, l.current, l.height)?;
            if l.height != h {
                return Err(invalid(
                    "geometry.loops",
                    format!("loop {i} is not coplanar with loop 0"),
                ));
            }
            if i > 0 && l.radius <= loops[i - 1].radius {
                return Err(invalid(
                    "geometry.loops",
                    format!("radii must strictly increase (loop {i})"),
                ));
            }
        }
        Ok(Self {
            loops,
            label: label.into(),
        })
    }

    /// Three coplanar loops at R − s, R, R + s: the outer two carry
    /// `outer_current` each and the central one `central_current`.
    pub fn three_wire(
        central_radius: f64,
        spacing: f64,
        outer_current: f64,
        central_current: f64,
        height: f64,
    ) -> Result<Self> {
        if !(spacing > 0.0 && spacing < central_radius) {
            return Err(invalid("geometry.spacing", "must satisfy 0 < s < R"));
        }
        Self::new(
            vec![
                WireLoop::new(central_radius - spacing, outer_current, height)?,
                WireLoop::new(central_radius, central_current, height)?,
                WireLoop::new(central_radius + spacing, outer_current, height)?,
            ],
            "three-wire",
        )
    }

    /// R = 500 μm, 13 μm spacing, −123 / +121 / −123 mA on the chip surface.
    pub fn reference_design() -> Self {
        let mut g = Self::three_wire(500e-6, 13e-6, -0.123, 0.121, 0.0).expect("valid design");
        g.label = "reference three-wire guide".into();
        g
    }

    /// Same geometry with every current multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            loops: self
                .loops
                .iter()
                .map(|l| WireLoop {
                    current: l.current * factor,
                    ..*l
                })
                .collect(),
            label: self.label.clone(),
        }
    }

    /// Radius of the middle loop.
    pub fn central_radius(&self) -> f64 {
        self.loops[self.loops.len() / 2].radius
    }

    /// Mean radial spacing between neighbouring loops (the central radius / 10
    /// for a single loop).
    pub fn spacing(&self) -> f64 {
        match self.loops.len() {
            1 => self.loops[0].radius / 10.0,
            n => (self.loops[n - 1].radius - self.loops[0].radius) / (n - 1) as f64,
        }
    }

    pub fn height(&self) -> f64 {
        self.loops[0].height
    }
}

impl FieldSource for WireLoop {
    fn field(&self, rho: f64, z: f64) -> Result<FieldVector> {
        loop_field(self, rho, z)
    }
}

impl FieldSource for GuideGeometry {
    fn field(&self, rho: f64, z: f64) -> Result<FieldVector> {
        total_field(self, rho, z)
    }
}

/// Complete elliptic integrals K(m) and E(m), parameter m = k², given both
/// m and its complement 1 − m (passed separately to avoid cancellation near
/// m → 1). Arithmetic–geometric mean iteration.
pub fn elliptic_ke(m: f64, m1: f64) -> (f64, f64) {
    let mut a = 1.0_f64;
    let mut b = m1.sqrt();
    let mut weight = 0.5;
    let mut sum = weight * m;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        let a_next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = a_next;
        weight *= 2.0;
        sum += weight * c * c;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

/// Closed-form field of one loop at (ρ, z).
pub fn loop_field(wire: &WireLoop, rho: f64, z: f64) -> Result<FieldVector> {
    if wire.distance_to_filament(rho, z) <= FILAMENT_EPS {
        return Err(Error::SingularPoint {
            loop_index: 0,
            rho,
            z,
        });
    }
    let a = wire.radius;
    let dz = z - wire.height;
    let rho_abs = rho.abs();
    let scale = a.hypot(dz);

    if rho_abs < NEAR_AXIS * scale {
        // Off-axis expansion of the on-axis field B(z) = C·u^(-3/2), u = a² + z²:
        // b_z = B − ρ²B''/4, b_ρ = −ρB'/2 + ρ³B'''/16.
        let u = a * a + dz * dz;
        let c = MU_0 * wire.current * a * a / 2.0;
        let b0 = c / (u * u.sqrt());
        let d1 = -3.0 * c * dz / (u * u * u.sqrt());
        let d2 = 3.0 * c * (4.0 * dz * dz - a * a) / (u * u * u * u.sqrt());
        let d3 = 15.0 * c * dz * (3.0 * a * a - 4.0 * dz * dz) / (u * u * u * u * u.sqrt());
        let bz = b0 - rho * rho * d2 / 4.0;
        let br = -rho * d1 / 2.0 + rho.powi(3) * d3 / 16.0;
        return Ok(FieldVector {
            b_rho: br,
            b_z: bz,
            rho,
            z,
        });
    }

    let far2 = (a + rho_abs).powi(2) + dz * dz;
    let near2 = (a - rho_abs).powi(2) + dz * dz;
    let m = 4.0 * a * rho_abs / far2;
    let (k, e) = elliptic_ke(m, near2 / far2);
    let pre = MU_0 * wire.current / (2.0 * PI * far2.sqrt());
    let bz = pre * (k + (a * a - rho_abs * rho_abs - dz * dz) / near2 * e);
    let br = pre * dz / rho_abs * (-k + (a * a + rho_abs * rho_abs + dz * dz) / near2 * e);
    Ok(FieldVector {
        b_rho: if rho < 0.0 { -br } else { br },
        b_z: bz,
        rho,
        z,
    })
}

/// Biot–Savart sum over `n_segments` straight chords inscribed in the loop.
/// Slow; used to validate [`loop_field`]. Converges as O(1/n²).
pub fn loop_field_oracle(
    wire: &WireLoop,
    rho: f64,
    z: f64,
    n_segments: usize,
) -> Result<FieldVector> {
    if n_segments < 8 {
        return Err(invalid("n_segments", "at least 8 segments required"));
    }
    if wire.distance_to_filament(rho, z) <= FILAMENT_EPS {
        return Err(Error::SingularPoint {
            loop_index: 0,
            rho,
            z,
        });
    }
    let p = [rho, 0.0, z];
    let vertex = |j: usize| {
        let phi = 2.0 * PI * (j % n_segments) as f64 / n_segments as f64;
        [
            wire.radius * phi.cos(),
            wire.radius * phi.sin(),
            wire.height,
        ]
    };
    let mut acc = [0.0_f64; 3];
    let mut start = vertex(0);
    for j in 1..=n_segments {
        let end = vertex(j);
        let r1 = sub(p, start);
        let r2 = sub(p, end);
        let n1 = norm(r1);
        let n2 = norm(r2);
        let c = cross(r1, r2);
        let f = (n1 + n2) / (n1 * n2 * (n1 * n2 + dot(r1, r2)));
        for (a, ci) in acc.iter_mut().zip(c) {
            *a += ci * f;
        }
        start = end;
    }
    let pre = MU_0 * wire.current / (4.0 * PI);
    Ok(FieldVector {
        b_rho: pre * acc[0],
        b_z: pre * acc[2],
        rho,
        z,
    })
}

/// Superposition of all loops of `geometry`.
pub fn total_field(geometry: &GuideGeometry, rho: f64, z: f64) -> Result<FieldVector> {
    let mut total = FieldVector {
        rho,
        z,
        ..Default::default()
    };
    for (i, wire) in geometry.loops.iter().enumerate() {
        let b = loop_field(wire, rho, z).map_err(|e| match e {
            Error::SingularPoint { rho, z, .. } => Error::SingularPoint {
                loop_index: i,
                rho,
                z,
            },
            other => other,
        })?;
        total = total.add(b);
    }
    Ok(total)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn vec_rel(a: FieldVector, b: FieldVector) -> f64 {
        (a.b_rho - b.b_rho).hypot(a.b_z - b.b_z) / b.modulus()
    }

    #[test]
    fn elliptic_reference_values() {
        // K(0) = E(0) = π/2; K(0.5), E(0.5) from standard tables.
        let (k, e) = elliptic_ke(0.0, 1.0);
        assert!(rel(k, PI / 2.0) < 1e-15 && rel(e, PI / 2.0) < 1e-15);
        let (k, e) = elliptic_ke(0.5, 0.5);
        assert!(rel(k, 1.854_074_677_301_372) < 1e-14, "{k}");
        assert!(rel(e, 1.350_643_881_047_675_5) < 1e-14, "{e}");
        let (k, e) = elliptic_ke(0.99, 0.01);
        assert!(rel(k, 3.695_637_362_989_875) < 1e-13, "{k}");
        assert!(rel(e, 1.015_993_545_025_223_8) < 1e-13, "{e}");
    }

    #[test]
    fn center_of_loop() {
        let w = WireLoop::new(0.01, 2.0, 0.3).unwrap();
        let b = loop_field(&w, 0.0, 0.3).unwrap();
        assert!(rel(b.b_z, MU_0 * 2.0 / (2.0 * 0.01)) < 1e-14);
        assert_eq!(b.b_rho, 0.0);
    }

    #[test]
    fn on_axis_textbook() {
        let w = WireLoop::new(0.02, -1.5, 0.0).unwrap();
        for dz in [-0.05, 0.001, 0.02, 0.3] {
            let b = loop_field(&w, 0.0, dz).unwrap();
            let a: f64 = 0.02;
            let expected = MU_0 * -1.5 * a * a / (2.0 * (a * a + dz * dz).powf(1.5));
            assert!(rel(b.b_z, expected) < 1e-13);
        }
    }

    #[test]
    fn near_axis_branch_is_continuous() {
        // Across the branch switch the closed form must follow the ρ² and ρ³
        // corrections, estimated here by finite differences of the on-axis field.
        let (a, i) = (1e-3, 0.1);
        let w = WireLoop::new(a, i, 0.0).unwrap();
        let z = 4e-4;
        let s = a.hypot(z);
        let on_axis = |z: f64| MU_0 * i * a * a / (2.0 * (a * a + z * z).powf(1.5));
        let h = 1e-3 * s;
        let d2 = (on_axis(z + h) - 2.0 * on_axis(z) + on_axis(z - h)) / (h * h);
        let d3 = (on_axis(z + 2.0 * h) - 2.0 * on_axis(z + h) + 2.0 * on_axis(z - h)
            - on_axis(z - 2.0 * h))
            / (2.0 * h * h * h);
        let (ri, ro) = (0.99 * NEAR_AXIS * s, 1.01 * NEAR_AXIS * s);
        let inside = loop_field(&w, ri, z).unwrap();
        let outside = loop_field(&w, ro, z).unwrap();
        let dr2 = ro * ro - ri * ri;
        assert!(rel(outside.b_z, inside.b_z - dr2 * d2 / 4.0) < 1e-10);
        assert!(rel(outside.b_rho / ro, inside.b_rho / ri + dr2 * d3 / 16.0) < 1e-9);
    }

    #[test]
    fn off_axis_matches_oracle() {
        let a = 1e-3;
        let w = WireLoop::new(a, 0.2, 0.0).unwrap();
        let closed = loop_field(&w, a / 2.0, a / 4.0).unwrap();
        let oracle = loop_field_oracle(&w, a / 2.0, a / 4.0, 100_000).unwrap();
        assert!(vec_rel(oracle, closed) < 1e-6);
    }

    #[test]
    fn oracle_converges_quadratically() {
        let a = 1e-3;
        let w = WireLoop::new(a, 0.2, 0.0).unwrap();
        let exact = loop_field(&w, 0.7 * a, 0.3 * a).unwrap();
        let e1 = vec_rel(loop_field_oracle(&w, 0.7 * a, 0.3 * a, 400).unwrap(), exact);
        let e2 = vec_rel(loop_field_oracle(&w, 0.7 * a, 0.3 * a, 800).unwrap(), exact);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn oracle_zero_current_and_axis() {
        let w = WireLoop::new(1e-3, 0.0, 0.0).unwrap();
        let b = loop_field_oracle(&w, 3e-4, 1e-4, 64).unwrap();
        assert_eq!(b.modulus(), 0.0);
        let w = WireLoop::new(1e-3, 0.5, 0.0).unwrap();
        let b = loop_field_oracle(&w, 0.0, 7e-4, 100_000).unwrap();
        let expected = loop_field(&w, 0.0, 7e-4).unwrap();
        assert!(rel(b.b_z, expected.b_z) < 1e-8);
        assert!(loop_field_oracle(&w, 0.0, 7e-4, 4).is_err());
    }

    #[test]
    fn on_filament_is_singular() {
        let g = GuideGeometry::reference_design();
        let err = total_field(&g, 513e-6, 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularPoint { loop_index: 2, .. }));
    }

    #[test]
    fn geometry_validation() {
        let l = |r| WireLoop::new(r, 0.1, 0.0).unwrap();
        assert!(GuideGeometry::new(vec![l(2.0), l(1.0)], "x").is_err());
        let mut off = l(3.0);
        off.height = 1e-6;
        assert!(GuideGeometry::new(vec![l(1.0), off], "x").is_err());
        assert!(GuideGeometry::new(vec![], "x").is_err());
    }

    #[test]
    fn negated_currents_negate_field() {
        let g = GuideGeometry::reference_design();
        let b = total_field(&g, 500e-6, 13e-6).unwrap();
        let n = total_field(&g.scaled(-1.0), 500e-6, 13e-6).unwrap();
        assert_eq!(n.b_rho, -b.b_rho);
        assert_eq!(n.b_z, -b.b_z);
    }

    #[test]
    fn single_loop_superposition() {
        let w = WireLoop::new(5e-4, 0.1, 0.0).unwrap();
        let g = GuideGeometry::new(vec![w], "one").unwrap();
        assert_eq!(
            total_field(&g, 3e-4, 2e-5).unwrap(),
            loop_field(&w, 3e-4, 2e-5).unwrap()
        );
    }

    #[test]
    fn divergence_free() {
        let g = GuideGeometry::reference_design();
        let h = 1e-8;
        for &(rho, z) in &[
            (450e-6, 20e-6),
            (520e-6, 35e-6),
            (600e-6, 60e-6),
            (300e-6, -40e-6),
        ] {
            let b = |r, z| total_field(&g, r, z).unwrap();
            let d_rho = ((rho + h) * b(rho + h, z).b_rho - (rho - h) * b(rho - h, z).b_rho)
                / (2.0 * h * rho);
            let d_z = (b(rho, z + h).b_z - b(rho, z - h).b_z) / (2.0 * h);
            let mag = b(rho, z).modulus();
            assert!(
                (d_rho + d_z).abs() < 1e-6 * mag / h,
                "div {} at {rho},{z}",
                d_rho + d_z
            );
        }
    }

    #[test]
    fn mirror_symmetry_about_loop_plane() {
        let w = WireLoop::new(1e-3, 0.3, 2e-4).unwrap();
        for &(rho, d) in &[(2e-4, 1e-4), (1.3e-3, 5e-5), (8e-4, 3e-3)] {
            let up = loop_field(&w, rho, 2e-4 + d).unwrap();
            let down = loop_field(&w, rho, 2e-4 - d).unwrap();
            assert!((up.b_rho + down.b_rho).abs() <= 1e-12 * up.b_rho.abs());
            assert!((up.b_z - down.b_z).abs() <= 1e-12 * up.b_z.abs());
        }
    }

    proptest! {
        #[test]
        fn linear_in_currents(
            rho in 0.0f64..1e-3,
            z in 1e-6f64..2e-4,
            alpha in prop::sample::select(vec![-2.0, -1.0, 0.5, 3.0]),
        ) {
            let g = GuideGeometry::reference_design();
            let b = total_field(&g, rho, z).unwrap();
            let s = total_field(&g.scaled(alpha), rho, z).unwrap();
            prop_assert!((s.b_rho - alpha * b.b_rho).abs() <= 1e-12 * b.modulus().abs() * alpha.abs());
            prop_assert!((s.b_z - alpha * b.b_z).abs() <= 1e-12 * b.modulus().abs() * alpha.abs());
        }
    }
}
