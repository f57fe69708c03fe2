//! Physical constants (CODATA 2018) and unit conventions.
//!
//! Every formula in the crate takes angular frequencies in rad/s. Values quoted
//! in Hz are converted once, at the boundary, with [`hz_to_angular`].

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A fixed snapshot of the constants used by every formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Elementary charge (C).
    pub e: f64,
    /// Electron mass (kg).
    pub m_e: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Speed of light in vacuum (m/s).
    pub c: f64,
    /// Proton mass (kg).
    pub m_p: f64,
    /// Magnitude of the free-electron g-factor.
    pub g_e: f64,
    /// Vacuum permeability (N/A^2).
    pub mu_0: f64,
}

/// CODATA 2018 recommended values.
pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    e: 1.602_176_634e-19,
    m_e: 9.109_383_701_5e-31,
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    c: 299_792_458.0,
    m_p: 1.672_621_923_69e-27,
    g_e: 2.002_319_304_362_56,
    mu_0: 1.256_637_062_12e-6,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

/// Trapped species. Only mass and charge enter the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Species {
    Electron,
    Positron,
    Proton,
    Antiproton,
}

impl Species {
    pub fn particle(self) -> Particle {
        let k = CODATA_2018;
        match self {
            Species::Electron => Particle::new(k.m_e, -k.e),
            Species::Positron => Particle::new(k.m_e, k.e),
            Species::Proton => Particle::new(k.m_p, k.e),
            Species::Antiproton => Particle::new(k.m_p, -k.e),
        }
    }
}

/// Mass and signed charge of a trapped particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    /// kg
    pub mass: f64,
    /// C, signed
    pub charge: f64,
}

impl Particle {
    pub const fn new(mass: f64, charge: f64) -> Self {
        Self { mass, charge }
    }

    pub fn electron() -> Self {
        Species::Electron.particle()
    }

    pub fn proton() -> Self {
        Species::Proton.particle()
    }

    pub fn charge_magnitude(&self) -> f64 {
        self.charge.abs()
    }
}

/// Free-space cyclotron frequency `|q| B / m` in rad/s.
pub fn cyclotron_frequency(b: f64, q: f64, m: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::domain("magnetic field must be positive", b));
    }
    if !(m > 0.0) {
        return Err(Error::domain("mass must be positive", m));
    }
    if q == 0.0 || !q.is_finite() {
        return Err(Error::domain("charge must be non-zero", q));
    }
    Ok(q.abs() * b / m)
}

#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    f * TAU
}

#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TAU
}
