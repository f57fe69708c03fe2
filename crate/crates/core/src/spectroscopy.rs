//! Single-trap frequency shifts and linewidths.

use serde::{Deserialize, Serialize};

use crate::circuit::TrapParams;
use crate::constants::{cyclotron_frequency, Particle, PhysicalConstants, CODATA_2018};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    /// Projection `m_s` in units of hbar.
    pub fn projection(self) -> f64 {
        match self {
            Spin::Down => -0.5,
            Spin::Up => 0.5,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Down => Spin::Up,
            Spin::Up => Spin::Down,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantumNumbers {
    pub n_c: u32,
    pub spin: Spin,
    pub n_z: u32,
}

impl QuantumNumbers {
    pub fn new(n_c: u32, spin: Spin, n_z: u32) -> Self {
        Self { n_c, spin, n_z }
    }
}

/// Per-trap shift and width set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSet {
    /// Bottle shift per quantum, rad/s. Same sign as `B2`.
    pub delta: f64,
    /// Relativistic shift per cyclotron quantum, rad/s. Always negative.
    pub delta_rel: f64,
    /// Thermal cyclotron linewidth, rad/s.
    pub broadening: f64,
}

impl ShiftSet {
    pub fn for_trap(trap: &TrapParams, particle: &Particle) -> Result<Self> {
        trap.validate()?;
        let omega_c = cyclotron_frequency(trap.b_field, particle.charge, particle.mass)?;
        Ok(Self {
            delta: bottle_delta(trap.b2, trap.omega_z, particle)?,
            delta_rel: relativistic_delta(omega_c, trap.omega_z, particle.mass)?,
            broadening: cyclotron_broadening(trap.b2, trap.t_axial, trap.omega_z, particle)?,
        })
    }
}

/// Axial shift per cyclotron quantum from a quadratic gradient:
/// `hbar |q| B2 / (m^2 omega_z)`.
pub fn bottle_delta(b2: f64, omega_z: f64, particle: &Particle) -> Result<f64> {
    if !(omega_z > 0.0) {
        return Err(Error::domain("axial frequency must be positive", omega_z));
    }
    let k = CODATA_2018;
    let m = particle.mass;
    Ok(k.hbar * particle.charge_magnitude() * b2 / (m * m * omega_z))
}

/// Axial frequency for the given quantum numbers:
/// `omega_z0 + delta (n_c + 1/2 + (g/2) m_s)`.
pub fn axial_frequency(qn: QuantumNumbers, omega_z0: f64, delta: f64, g: f64) -> f64 {
    omega_z0 + delta * (qn.n_c as f64 + 0.5 + 0.5 * g * qn.spin.projection())
}

/// Relativistic mass-increase shift per cyclotron quantum,
/// `-hbar omega_c omega_z / (2 m c^2)`.
pub fn relativistic_delta(omega_c: f64, omega_z: f64, mass: f64) -> Result<f64> {
    if !(omega_c > 0.0) {
        return Err(Error::domain("cyclotron frequency must be positive", omega_c));
    }
    if !(omega_z > 0.0) {
        return Err(Error::domain("axial frequency must be positive", omega_z));
    }
    if !(mass > 0.0) {
        return Err(Error::domain("mass must be positive", mass));
    }
    let k = CODATA_2018;
    Ok(-k.hbar * omega_c * omega_z / (2.0 * mass * k.c * k.c))
}

/// Thermal cyclotron linewidth `|q| |B2| <z^2> / m` with
/// `<z^2> = k_B T_z / (m omega_z^2)`.
pub fn cyclotron_broadening(b2: f64, t_z: f64, omega_z: f64, particle: &Particle) -> Result<f64> {
    if !(t_z >= 0.0) {
        return Err(Error::domain("axial temperature must be >= 0", t_z));
    }
    if !(omega_z > 0.0) {
        return Err(Error::domain("axial frequency must be positive", omega_z));
    }
    let k = CODATA_2018;
    let m = particle.mass;
    let z_sq = k.k_b * t_z / (m * omega_z * omega_z);
    Ok(particle.charge_magnitude() * b2.abs() * z_sq / m)
}

/// Power-law electric-field-noise model
/// `S_E = S_ref (f/f_ref)^a (d/d_ref)^b (T/T_ref)^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatingModel {
    /// V^2 m^-2 Hz^-1
    pub s_e_ref: f64,
    pub freq_exp: f64,
    pub dist_exp: f64,
    pub temp_exp: f64,
    /// Hz
    pub ref_freq: f64,
    /// m
    pub ref_dist: f64,
    /// K
    pub ref_temp: f64,
}

impl Default for HeatingModel {
    fn default() -> Self {
        Self {
            s_e_ref: 1e-12,
            freq_exp: -1.0,
            dist_exp: -2.0,
            temp_exp: 0.5,
            ref_freq: 1e6,
            ref_dist: 100e-6,
            ref_temp: 6.0,
        }
    }
}

impl HeatingModel {
    /// Noise density at angular frequency `omega`, distance `d`, temperature `t`.
    pub fn spectral_density(&self, omega: f64, d: f64, t: f64) -> f64 {
        let f = omega / std::f64::consts::TAU;
        self.s_e_ref
            * (f / self.ref_freq).powf(self.freq_exp)
            * (d / self.ref_dist).powf(self.dist_exp)
            * (t / self.ref_temp).powf(self.temp_exp)
    }
}

/// Heating rate in quanta/s, `q^2 S_E(omega_z) / (4 m hbar omega_z)`.
///
/// The conversion from field-noise density to a quantum heating rate is the
/// usual single-mode relation for a particle in a harmonic well.
pub fn heating_rate(
    model: &HeatingModel,
    omega_z: f64,
    d_eff: f64,
    t: f64,
    particle: &Particle,
) -> Result<f64> {
    heating_rate_with(model, omega_z, d_eff, t, particle, &CODATA_2018)
}

pub fn heating_rate_with(
    model: &HeatingModel,
    omega_z: f64,
    d_eff: f64,
    t: f64,
    particle: &Particle,
    k: &PhysicalConstants,
) -> Result<f64> {
    for (what, v) in [
        ("axial frequency must be positive", omega_z),
        ("distance must be positive", d_eff),
        ("temperature must be positive", t),
    ] {
        if !(v > 0.0) {
            return Err(Error::domain(what, v));
        }
    }
    let s_e = model.spectral_density(omega_z, d_eff, t);
    let q = particle.charge;
    Ok(q * q * s_e / (4.0 * particle.mass * k.hbar * omega_z))
}
