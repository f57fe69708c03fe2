//! On-axis field of an axially magnetized annular cylinder.
//!
//! The ring is modeled with magnetic surface charge `+M` on its upper face and
//! `-M` on its lower face. On the axis each face is an annulus of uniform
//! charge with a closed-form field, so `B`, `dB/dz` and `d2B/dz2` all follow
//! analytically. The axis lies in the bore (`r_in > 0`), so `B = mu_0 H`
//! there.
//!
//! `b2` follows the bottle convention `B2 = (1/2) d2B/dz2`.

use std::io::Write;

use serde::Serialize;

use crate::constants::CODATA_2018;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingMagnet {
    /// m
    pub r_in: f64,
    /// m
    pub r_out: f64,
    /// Axial extent, m.
    pub height: f64,
    /// Axial magnetization, A/m.
    pub magnetization: f64,
    /// Axial position of the midplane, m.
    pub center_z: f64,
}

/// Saturation class of cobalt-iron, `mu_0 M` in tesla.
pub const COBALT_IRON_MU0_M: f64 = 2.35;

impl RingMagnet {
    pub fn new(r_in: f64, r_out: f64, height: f64, magnetization: f64, center_z: f64) -> Result<Self> {
        let ring = Self {
            r_in,
            r_out,
            height,
            magnetization,
            center_z,
        };
        ring.validate()?;
        Ok(ring)
    }

    /// Ring with magnetization given as `mu_0 M` in tesla.
    pub fn with_polarization(
        r_in: f64,
        r_out: f64,
        height: f64,
        mu0_m: f64,
        center_z: f64,
    ) -> Result<Self> {
        Self::new(r_in, r_out, height, mu0_m / CODATA_2018.mu_0, center_z)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_in > 0.0) {
            return Err(Error::domain("inner radius must be positive", self.r_in));
        }
        if !(self.r_out > self.r_in) {
            return Err(Error::domain("outer radius must exceed inner radius", self.r_out));
        }
        if !(self.height > 0.0) {
            return Err(Error::domain("height must be positive", self.height));
        }
        if !self.magnetization.is_finite() {
            return Err(Error::domain("magnetization must be finite", self.magnetization));
        }
        if !self.center_z.is_finite() {
            return Err(Error::domain("center must be finite", self.center_z));
        }
        Ok(())
    }

    pub fn polarization(&self) -> f64 {
        CODATA_2018.mu_0 * self.magnetization
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            magnetization: self.magnetization * factor,
            ..*self
        }
    }

    fn faces(&self) -> (f64, f64) {
        let half = 0.5 * self.height;
        (self.center_z + half, self.center_z - half)
    }

    /// `B`, `dB/dz`, `d2B/dz2` on axis at `z`.
    fn derivatives(&self, z: f64) -> [f64; 3] {
        let (top, bottom) = self.faces();
        let pre = 0.5 * self.polarization();
        let up = annulus_terms(z - top, self.r_in, self.r_out);
        let down = annulus_terms(z - bottom, self.r_in, self.r_out);
        [
            pre * (up[0] - down[0]),
            pre * (up[1] - down[1]),
            pre * (up[2] - down[2]),
        ]
    }

    /// Rescales the magnetization so that `B2(z) = target`.
    pub fn calibrated_to_b2(&self, target: f64, z: f64) -> Result<Self> {
        self.validate()?;
        let (_, b2) = gradients(self, z)?;
        if b2 == 0.0 || !b2.is_finite() {
            return Err(Error::domain("cannot calibrate against a vanishing B2", b2));
        }
        Ok(self.scaled(target / b2))
    }
}

/// `u/sqrt(u^2+a^2) - u/sqrt(u^2+b^2)` and its first two derivatives.
fn annulus_terms(u: f64, a: f64, b: f64) -> [f64; 3] {
    let ga = disk_terms(u, a);
    let gb = disk_terms(u, b);
    [ga[0] - gb[0], ga[1] - gb[1], ga[2] - gb[2]]
}

fn disk_terms(u: f64, r: f64) -> [f64; 3] {
    let s = u * u + r * r;
    let root = s.sqrt();
    let r2 = r * r;
    [
        u / root,
        r2 / (s * root),
        -3.0 * r2 * u / (s * s * root),
    ]
}

/// Axial field of `ring` on axis at `z`, tesla. Excludes any background.
pub fn on_axis_field(ring: &RingMagnet, z: f64) -> Result<f64> {
    ring.validate()?;
    Ok(ring.derivatives(z)[0])
}

/// `(B1, B2)` = `(dB/dz, (1/2) d2B/dz2)` at `z`.
pub fn gradients(ring: &RingMagnet, z: f64) -> Result<(f64, f64)> {
    ring.validate()?;
    let d = ring.derivatives(z);
    Ok((d[1], 0.5 * d[2]))
}

/// Several coaxial rings in a uniform solenoid background.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetAssembly {
    pub rings: Vec<RingMagnet>,
    /// Uniform background field, T.
    pub background: f64,
}

impl MagnetAssembly {
    pub fn new(rings: Vec<RingMagnet>, background: f64) -> Result<Self> {
        for r in &rings {
            r.validate()?;
        }
        if !background.is_finite() {
            return Err(Error::domain("background field must be finite", background));
        }
        Ok(Self { rings, background })
    }

    pub fn sample(&self, z: f64) -> FieldSample {
        let mut d = [self.background, 0.0, 0.0];
        for ring in &self.rings {
            let r = ring.derivatives(z);
            d[0] += r[0];
            d[1] += r[1];
            d[2] += r[2];
        }
        FieldSample {
            z,
            b: d[0],
            b1: d[1],
            b2: 0.5 * d[2],
        }
    }

    pub fn field(&self, z: f64) -> f64 {
        self.sample(z).b
    }

    pub fn profile(&self, z: &[f64]) -> FieldProfile {
        let mut p = FieldProfile::default();
        for &zi in z {
            let s = self.sample(zi);
            p.z.push(s.z);
            p.b.push(s.b);
            p.b1.push(s.b1);
            p.b2.push(s.b2);
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub z: f64,
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Columns of sampled on-axis field values. `b2` carries the factor 1/2.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldProfile {
    pub z: Vec<f64>,
    pub b: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Serialize)]
struct ProfileRow<'a> {
    z_m: f64,
    b_t: f64,
    b1_t_per_m: f64,
    b2_t_per_m2: f64,
    marker: &'a str,
    fd_agrees: Option<bool>,
}

impl FieldProfile {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Writes `z_m,b_t,b1_t_per_m,b2_t_per_m2,marker,fd_agrees`.
    ///
    /// `marker(i)` labels a row (e.g. `logic`), `check(i)` carries the
    /// finite-difference agreement flag when it was computed.
    pub fn write_csv<W: Write>(
        &self,
        out: W,
        marker: impl Fn(usize) -> &'static str,
        check: impl Fn(usize) -> Option<bool>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for i in 0..self.len() {
            w.serialize(ProfileRow {
                z_m: self.z[i],
                b_t: self.b[i],
                b1_t_per_m: self.b1[i],
                b2_t_per_m2: self.b2[i],
                marker: marker(i),
                fd_agrees: check(i),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Richardson-extrapolated central differences of `field`, returning
/// `(B1, B2)` with the 1/2 convention on `B2`. Uses only field evaluations.
pub fn finite_difference_gradients(
    field: impl Fn(f64) -> f64,
    z: f64,
    step: f64,
) -> Result<(f64, f64)> {
    if !(step > 0.0) || z + 0.25 * step == z {
        return Err(Error::StepUnderflow { z, step });
    }
    let first = |h: f64| (field(z + h) - field(z - h)) / (2.0 * h);
    let second = |h: f64| (field(z + h) - 2.0 * field(z) + field(z - h)) / (h * h);
    let richardson = |g: &dyn Fn(f64) -> f64| {
        let coarse = g(step);
        let mid = g(0.5 * step);
        let fine = g(0.25 * step);
        let r1 = (4.0 * mid - coarse) / 3.0;
        let r2 = (4.0 * fine - mid) / 3.0;
        (16.0 * r2 - r1) / 15.0
    };
    Ok((richardson(&first), 0.5 * richardson(&second)))
}

/// A finite-difference step suited to the ring's length scales at `z`.
pub fn suggested_step(ring: &RingMagnet, z: f64) -> f64 {
    let (top, bottom) = ring.faces();
    let scale = [top, bottom]
        .iter()
        .map(|f| ((z - f).powi(2) + ring.r_in * ring.r_in).sqrt())
        .fold(f64::INFINITY, f64::min);
    0.02 * scale
}

/// Whether analytic and finite-difference gradients agree to `rel_tol`
/// (relative to the larger magnitude of each pair).
pub fn gradients_agree(assembly: &MagnetAssembly, z: f64, rel_tol: f64) -> Result<bool> {
    let step = assembly
        .rings
        .iter()
        .map(|r| suggested_step(r, z))
        .fold(f64::INFINITY, f64::min);
    if !step.is_finite() {
        return Ok(true);
    }
    let (fd1, fd2) = finite_difference_gradients(|x| assembly.field(x), z, step)?;
    let s = assembly.sample(z);
    let close = |a: f64, b: f64, floor: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(floor);
    // Field-scale floor so points where a gradient crosses zero do not fail spuriously.
    let floor1 = 1e-9 * (s.b - assembly.background).abs() / step;
    let floor2 = 1e-9 * (s.b - assembly.background).abs() / (step * step);
    Ok(close(s.b1, fd1, floor1) && close(s.b2, fd2, floor2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn paper_ring() -> RingMagnet {
        RingMagnet::with_polarization(5e-3, 15e-3, 5e-3, COBALT_IRON_MU0_M, 0.0).unwrap()
    }

    /// Volume integral of point dipoles (on-axis dipole field), composite
    /// Simpson in both radius and height.
    fn dipole_quadrature(ring: &RingMagnet, z: f64, n: usize) -> f64 {
        let simpson_w = |i: usize| {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let hr = (ring.r_out - ring.r_in) / n as f64;
        let hz = ring.height / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let rho = ring.r_in + i as f64 * hr;
            for j in 0..=n {
                let zp = ring.center_z - 0.5 * ring.height + j as f64 * hz;
                let u = z - zp;
                let r2 = u * u + rho * rho;
                let r = r2.sqrt();
                let kernel = (3.0 * u * u / (r2 * r2 * r) - 1.0 / (r2 * r)) * rho;
                acc += simpson_w(i) * simpson_w(j) * kernel;
            }
        }
        let integral = acc * hr * hz / 9.0;
        CODATA_2018.mu_0 * ring.magnetization / (4.0 * std::f64::consts::PI)
            * 2.0
            * std::f64::consts::PI
            * integral
    }

    #[test]
    fn charge_model_matches_dipole_quadrature() {
        let ring = paper_ring();
        for z in [0.0, 1e-3, 4e-3, 1e-2, 5e-2] {
            let a = on_axis_field(&ring, z).unwrap();
            let q = dipole_quadrature(&ring, z, 400);
            assert!((a - q).abs() <= 1e-7 * a.abs().max(1e-6), "z={z}: {a} vs {q}");
        }
    }

    #[test]
    fn bore_field_opposes_magnetization() {
        let ring = paper_ring();
        assert!(on_axis_field(&ring, 0.0).unwrap() < 0.0);
        let (b1, b2) = gradients(&ring, 0.0).unwrap();
        assert_eq!(b1, 0.0);
        assert!(b2 > 0.0);
    }

    #[test]
    fn far_field_dipole_decay() {
        let ring = paper_ring();
        let b1 = on_axis_field(&ring, 1.0).unwrap();
        let b2 = on_axis_field(&ring, 2.0).unwrap();
        assert!((b2 / b1 - 0.125).abs() < 1e-4);
        assert!(on_axis_field(&ring, 1e4).unwrap().abs() < 1e-12);
        // Dipole moment m = M V; on-axis B = mu0 m / (2 pi z^3).
        let vol = std::f64::consts::PI * (ring.r_out.powi(2) - ring.r_in.powi(2)) * ring.height;
        let dip = CODATA_2018.mu_0 * ring.magnetization * vol / (2.0 * std::f64::consts::PI);
        assert!((b1 / dip - 1.0).abs() < 1e-3);
    }

    #[test]
    fn calibration_hits_target() {
        let cal = paper_ring().calibrated_to_b2(9000.0, 0.0).unwrap();
        let (_, b2) = gradients(&cal, 0.0).unwrap();
        assert!((b2 - 9000.0).abs() < 1e-9);
        let (_, far) = gradients(&cal, 0.05).unwrap();
        assert!(far > 2.0 && far < 8.0, "{far}");
    }

    #[test]
    fn default_magnetization_absolute_value() {
        // Reported, not a paper claim: full saturation overshoots 9000 T/m^2.
        let (_, b2) = gradients(&paper_ring(), 0.0).unwrap();
        assert!(b2 > 9000.0 && b2 < 5e4, "{b2}");
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(RingMagnet::new(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(RingMagnet::new(2.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(RingMagnet::new(1.0, 2.0, 0.0, 1.0, 0.0).is_err());
        assert!(RingMagnet::new(1.0, 2.0, 1.0, f64::NAN, 0.0).is_err());
        let bad = RingMagnet {
            r_in: -1.0,
            ..paper_ring()
        };
        assert!(on_axis_field(&bad, 0.0).is_err());
        assert!(gradients(&bad, 0.0).is_err());
    }

    #[test]
    fn analytic_matches_fd_at_random_points() {
        let ring = paper_ring();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let z: f64 = rng.gen_range(-0.1..0.1);
            let (b1, b2) = gradients(&ring, z).unwrap();
            let (f1, f2) =
                finite_difference_gradients(|x| on_axis_field(&ring, x).unwrap(), z, suggested_step(&ring, z))
                    .unwrap();
            assert!((b1 - f1).abs() <= 1e-6 * b1.abs(), "B1 at {z}: {b1} vs {f1}");
            assert!((b2 - f2).abs() <= 1e-6 * b2.abs(), "B2 at {z}: {b2} vs {f2}");
        }
    }

    #[test]
    fn fd_step_underflow() {
        let r = finite_difference_gradients(|x| x, 1e300, 1.0);
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
        assert!(finite_difference_gradients(|x| x, 0.0, 0.0).is_err());
    }

    #[test]
    fn background_only_shifts_field() {
        let ring = paper_ring();
        let a = MagnetAssembly::new(vec![ring], 0.0).unwrap().sample(0.01);
        let b = MagnetAssembly::new(vec![ring], 6.0).unwrap().sample(0.01);
        assert!((b.b - 6.0 - a.b).abs() < 1e-14);
        assert_eq!(a.b1, b.b1);
        assert_eq!(a.b2, b.b2);
    }

    #[test]
    fn csv_has_unit_header() {
        let asm = MagnetAssembly::new(vec![paper_ring()], 6.0).unwrap();
        let p = asm.profile(&[0.0, 0.05]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf, |i| if i == 0 { "logic" } else { "spectroscopy" }, |_| Some(true))
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("z_m,b_t,b1_t_per_m,b2_t_per_m2,marker,fd_agrees\n"));
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn linear_in_magnetization(k in -10.0f64..10.0, z in -0.1f64..0.1) {
            let ring = paper_ring();
            let s = ring.scaled(k);
            let a = ring.derivatives(z);
            let b = s.derivatives(z);
            for i in 0..3 {
                prop_assert!((b[i] - k * a[i]).abs() <= 1e-12 * (k * a[i]).abs().max(1e-300));
            }
        }

        #[test]
        fn superposition(z in -0.1f64..0.1, offset in -0.05f64..0.05) {
            let r1 = paper_ring();
            let r2 = RingMagnet { center_z: offset, ..paper_ring().scaled(0.3) };
            let sum = MagnetAssembly::new(vec![r1, r2], 0.0).unwrap().sample(z);
            let a = MagnetAssembly::new(vec![r1], 0.0).unwrap().sample(z);
            let b = MagnetAssembly::new(vec![r2], 0.0).unwrap().sample(z);
            let tol = 1e-14 * (a.b.abs() + b.b.abs());
            prop_assert!((sum.b - a.b - b.b).abs() <= tol);
        }

        #[test]
        fn midplane_symmetry(u in 0.0f64..0.1, c in -0.02f64..0.02) {
            let ring = RingMagnet { center_z: c, ..paper_ring() };
            let p = ring.derivatives(c + u);
            let m = ring.derivatives(c - u);
            let tol = |x: f64| 1e-12 * x.abs().max(1e-300);
            prop_assert!((p[0] - m[0]).abs() <= tol(p[0]).max(1e-15));
            prop_assert!((p[1] + m[1]).abs() <= tol(p[1]).max(1e-13));
            prop_assert!((p[2] - m[2]).abs() <= tol(p[2]).max(1e-10));
        }
    }
}
