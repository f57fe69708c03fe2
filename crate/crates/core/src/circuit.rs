//! Equivalent-circuit model of the coupled two-trap system.
//!
//! A parallel LCR resonator sits between the coupling wire and ground. Each
//! trapped particle looks like a series `l`/`c` branch attached to the wire.
//! Placing the resonator below the common axial frequency makes the wire
//! capacitive: the reactive part of `Z(omega_z)` sets the exchange rate and
//! the resistive part sets the dissipation.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{Particle, PhysicalConstants, CODATA_2018};
use crate::{Error, Result};

/// Parallel LCR resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    /// H
    pub inductance: f64,
    /// F
    pub capacitance: f64,
    /// Effective parallel resistance, ohm.
    pub resistance: f64,
}

/// Where to put the resonator relative to the axial frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Detuning {
    /// `omega_res = omega_z - k * width`
    Linewidths(f64),
    /// `omega_res = omega_z - delta`, delta in rad/s
    Absolute(f64),
}

impl ResonatorParams {
    pub fn new(inductance: f64, capacitance: f64, resistance: f64) -> Result<Self> {
        for (what, v) in [
            ("inductance must be positive", inductance),
            ("capacitance must be positive", capacitance),
            ("resistance must be positive", resistance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(what, v));
            }
        }
        Ok(Self {
            inductance,
            capacitance,
            resistance,
        })
    }

    /// Solves for the inductance that puts the resonance `detuning` below
    /// `omega_z`, for the given capacitance and resistance.
    pub fn detuned_below(
        omega_z: f64,
        capacitance: f64,
        resistance: f64,
        detuning: Detuning,
    ) -> Result<Self> {
        if !(omega_z > 0.0) {
            return Err(Error::domain("axial frequency must be positive", omega_z));
        }
        if !(capacitance > 0.0) {
            return Err(Error::domain("capacitance must be positive", capacitance));
        }
        if !(resistance > 0.0) {
            return Err(Error::domain("resistance must be positive", resistance));
        }
        let offset = match detuning {
            Detuning::Linewidths(k) => {
                if !(k > 0.0) {
                    return Err(Error::domain("detuning must be positive", k));
                }
                k / (capacitance * resistance)
            }
            Detuning::Absolute(d) => {
                if !(d > 0.0) {
                    return Err(Error::domain("detuning must be positive", d));
                }
                d
            }
        };
        let omega_res = omega_z - offset;
        if !(omega_res > 0.0) {
            return Err(Error::domain(
                "detuning places the resonance at or below zero frequency",
                omega_res,
            ));
        }
        Self::new(
            1.0 / (omega_res * omega_res * capacitance),
            capacitance,
            resistance,
        )
    }

    /// `1 / sqrt(L C)`
    pub fn center_frequency(&self) -> f64 {
        1.0 / (self.inductance * self.capacitance).sqrt()
    }

    /// Full width `1 / (C R)`.
    pub fn width(&self) -> f64 {
        1.0 / (self.capacitance * self.resistance)
    }

    pub fn quality_factor(&self) -> f64 {
        self.resistance * self.center_frequency() * self.capacitance
    }

    /// Complex impedance of the parallel LCR at angular frequency `omega`.
    pub fn impedance(&self, omega: f64) -> Result<Complex64> {
        if !(omega > 0.0) {
            return Err(Error::domain("frequency must be positive", omega));
        }
        // Written as C (w^2 - w_res^2) / w so the susceptance vanishes at w_res
        // without cancellation between two large terms.
        let w_res_sq = 1.0 / (self.inductance * self.capacitance);
        let susceptance = self.capacitance * (omega * omega - w_res_sq) / omega;
        let admittance = Complex64::new(1.0 / self.resistance, susceptance);
        Ok(admittance.inv())
    }
}

/// Which of the two traps a parameter block describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrapRole {
    Logic,
    Spectroscopy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    pub role: TrapRole,
    /// Effective trap size including the image-charge factor, m.
    pub d_eff: f64,
    /// Resonator-shifted operating axial frequency, rad/s.
    pub omega_z: f64,
    /// Axial magnetic field, T.
    pub b_field: f64,
    /// Local quadratic gradient, T/m^2.
    pub b2: f64,
    /// Axial temperature, K.
    pub t_axial: f64,
}

impl TrapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_eff > 0.0) {
            return Err(Error::domain("d_eff must be positive", self.d_eff));
        }
        if !(self.omega_z > 0.0) {
            return Err(Error::domain("axial frequency must be positive", self.omega_z));
        }
        if !(self.t_axial >= 0.0) {
            return Err(Error::domain("axial temperature must be >= 0", self.t_axial));
        }
        if !self.b2.is_finite() || !self.b_field.is_finite() {
            return Err(Error::domain("field values must be finite", self.b2));
        }
        Ok(())
    }
}

/// Series `l`/`c` branch equivalent to one trapped particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesModeEquivalent {
    /// H
    pub inductance: f64,
    /// F
    pub capacitance: f64,
    /// Axial frequency without the resonator, rad/s.
    pub bare_omega_z: f64,
}

/// `l = m (2 d_eff / q)^2`.
pub fn equivalent_inductance(d_eff: f64, particle: &Particle) -> f64 {
    let r = 2.0 * d_eff / particle.charge_magnitude();
    particle.mass * r * r
}

/// Series equivalent of a particle in `trap`, with the bare axial frequency
/// chosen so that the resonator pulls it exactly onto `trap.omega_z`.
pub fn series_equivalent(
    trap: &TrapParams,
    particle: &Particle,
    z_im: f64,
) -> Result<SeriesModeEquivalent> {
    trap.validate()?;
    let l = equivalent_inductance(trap.d_eff, particle);
    let bare = trap.omega_z + z_im / l;
    if !(bare > 0.0) {
        return Err(Error::domain("bare axial frequency must be positive", bare));
    }
    Ok(SeriesModeEquivalent {
        inductance: l,
        capacitance: 1.0 / (l * bare * bare),
        bare_omega_z: bare,
    })
}

/// Exchange rate `|Im Z| / (2 sqrt(l_L l_S))`, rad/s.
pub fn exchange_rate(z_im_abs: f64, l_logic: f64, l_spec: f64) -> Result<f64> {
    if !(l_logic > 0.0) {
        return Err(Error::domain("logic inductance must be positive", l_logic));
    }
    if !(l_spec > 0.0) {
        return Err(Error::domain("spectroscopy inductance must be positive", l_spec));
    }
    if !(z_im_abs >= 0.0) {
        return Err(Error::domain("|Im Z| must be non-negative", z_im_abs));
    }
    Ok(z_im_abs / (2.0 * (l_logic * l_spec).sqrt()))
}

/// Full-swap time `pi / (2 omega_ex)`.
pub fn exchange_time(omega_ex: f64) -> f64 {
    FRAC_PI_2 / omega_ex
}

/// Larger of the two single-mode damping rates `Re Z / l`.
pub fn dissipation_rate(z_re: f64, l_logic: f64, l_spec: f64) -> Result<f64> {
    if !(z_re >= 0.0) {
        return Err(Error::domain("Re Z must be non-negative", z_re));
    }
    if !(l_logic > 0.0 && l_spec > 0.0) {
        return Err(Error::domain("inductances must be positive", l_logic.min(l_spec)));
    }
    Ok((z_re / l_logic).max(z_re / l_spec))
}

/// Bose-Einstein occupation of a mode at `omega` and temperature `t`.
pub fn thermal_occupation(omega: f64, t: f64, k: &PhysicalConstants) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain("temperature must be >= 0", t));
    }
    if !(omega > 0.0) {
        return Err(Error::domain("frequency must be positive", omega));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (k.hbar * omega / (k.k_b * t)).exp_m1())
}

/// Inputs of the feasibility budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetInput {
    pub particle: Particle,
    pub logic: TrapParams,
    pub spectroscopy: TrapParams,
    pub capacitance: f64,
    pub resistance: f64,
    pub detuning: Detuning,
    /// Bath temperature seen by the axial modes, K.
    pub temperature: f64,
    /// Feasible iff `figure < threshold`.
    pub threshold: f64,
}

impl BudgetInput {
    pub fn with_detuning(&self, detuning: Detuning) -> Self {
        Self {
            detuning,
            ..self.clone()
        }
    }
}

/// Everything derived from the circuit model for one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeBudget {
    pub resonator: ResonatorParams,
    pub omega_z: f64,
    pub z_at_omega_z: Complex64,
    /// `1 / (omega_z |Im Z|)`, F.
    pub coupling_capacitance: f64,
    pub logic: SeriesModeEquivalent,
    pub spectroscopy: SeriesModeEquivalent,
    pub omega_ex: f64,
    pub t_ex: f64,
    pub gamma_logic: f64,
    pub gamma_spectroscopy: f64,
    /// `max(gamma_logic, gamma_spectroscopy)`
    pub gamma: f64,
    pub n_bar: f64,
    /// `t_ex * n_bar * gamma`
    pub figure: f64,
    pub threshold: f64,
    pub feasible: bool,
}

/// Composes impedance, series equivalents, exchange rate, dissipation and
/// thermal occupation into the feasibility figure.
pub fn qls_budget(input: &BudgetInput) -> Result<ExchangeBudget> {
    qls_budget_with(input, &CODATA_2018)
}

pub fn qls_budget_with(input: &BudgetInput, k: &PhysicalConstants) -> Result<ExchangeBudget> {
    input.logic.validate()?;
    input.spectroscopy.validate()?;
    let omega_z = input.logic.omega_z;
    if ((input.spectroscopy.omega_z - omega_z) / omega_z).abs() > 1e-12 {
        return Err(Error::domain(
            "both traps must share one axial frequency",
            input.spectroscopy.omega_z,
        ));
    }
    if !(input.threshold > 0.0) {
        return Err(Error::domain("feasibility threshold must be positive", input.threshold));
    }
    let resonator = ResonatorParams::detuned_below(
        omega_z,
        input.capacitance,
        input.resistance,
        input.detuning,
    )?;
    let z = resonator.impedance(omega_z)?;
    let logic = series_equivalent(&input.logic, &input.particle, z.im)?;
    let spectroscopy = series_equivalent(&input.spectroscopy, &input.particle, z.im)?;
    let omega_ex = exchange_rate(z.im.abs(), logic.inductance, spectroscopy.inductance)?;
    let t_ex = exchange_time(omega_ex);
    let gamma_logic = z.re / logic.inductance;
    let gamma_spectroscopy = z.re / spectroscopy.inductance;
    let gamma = dissipation_rate(z.re, logic.inductance, spectroscopy.inductance)?;
    let n_bar = thermal_occupation(omega_z, input.temperature, k)?;
    let figure = t_ex * n_bar * gamma;
    Ok(ExchangeBudget {
        resonator,
        omega_z,
        z_at_omega_z: z,
        coupling_capacitance: 1.0 / (omega_z * z.im.abs()),
        logic,
        spectroscopy,
        omega_ex,
        t_ex,
        gamma_logic,
        gamma_spectroscopy,
        gamma,
        n_bar,
        figure,
        threshold: input.threshold,
        feasible: figure < input.threshold,
    })
}

/// Result of [`optimize_detuning`].
#[derive(Debug, Clone, PartialEq)]
pub enum DetuningSearch {
    Feasible {
        linewidths: f64,
        budget: ExchangeBudget,
    },
    /// No detuning in the scan range met the constraint.
    Infeasible { best_linewidths: f64, best_figure: f64 },
}

/// Smallest detuning (in resonator linewidths, so the fastest exchange) whose
/// figure is at most `max_figure`.
///
/// In the capacitive limit `|Im Z| ~ 1/k` and `Re Z ~ 1/k^2`, so the figure
/// falls off as `1/k`. The scan walks a geometric grid upward from
/// `range.0` and bisects the first bracketing interval.
pub fn optimize_detuning(
    input: &BudgetInput,
    max_figure: f64,
    range: (f64, f64),
) -> Result<DetuningSearch> {
    if !(max_figure > 0.0 && max_figure < 1.0) {
        return Err(Error::domain("constraint must lie in (0, 1)", max_figure));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::domain("scan range must satisfy 0 < lo < hi", lo));
    }
    let eval = |k: f64| qls_budget(&input.with_detuning(Detuning::Linewidths(k)));

    const GRID: usize = 400;
    let ratio = (hi / lo).powf(1.0 / GRID as f64);
    let mut prev = lo;
    let first = eval(lo)?;
    if first.figure <= max_figure {
        return Ok(DetuningSearch::Feasible {
            linewidths: lo,
            budget: first,
        });
    }
    let mut best = (lo, first.figure);
    for i in 1..=GRID {
        let k = if i == GRID { hi } else { lo * ratio.powi(i as i32) };
        let b = eval(k)?;
        if b.figure < best.1 {
            best = (k, b.figure);
        }
        if b.figure <= max_figure {
            let (mut a, mut c) = (prev, k);
            for _ in 0..100 {
                let mid = 0.5 * (a + c);
                if eval(mid)?.figure <= max_figure {
                    c = mid;
                } else {
                    a = mid;
                }
                if (c - a) <= 1e-12 * c {
                    break;
                }
            }
            return Ok(DetuningSearch::Feasible {
                linewidths: c,
                budget: eval(c)?,
            });
        }
        prev = k;
    }
    Ok(DetuningSearch::Infeasible {
        best_linewidths: best.0,
        best_figure: best.1,
    })
}
