//! Run configuration: a strict TOML schema converted once into domain types.
//!
//! Frequencies are given in Hz and converted to rad/s here; everything else
//! is SI. Unknown keys are rejected and every error carries the dotted key
//! path of the offending value.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{BudgetInput, Detuning, TrapParams, TrapRole};
use crate::constants::{cyclotron_frequency, hz_to_angular, Particle, Species};
use crate::dynamics::{swap_fidelity, ExchangeParams};
use crate::magnetics::{gradients_agree, MagnetAssembly, RingMagnet};
use crate::protocol::{
    BroadeningProfile, DetectionModel, DriveModel, ProtocolConfig, StageDurations, Transition,
};
use crate::spectroscopy::ShiftSet;
use crate::{Error, Result};

pub const PAPER_ELECTRON: &str = include_str!("../../../scenarios/paper-electron.toml");
pub const PAPER_PROTON: &str = include_str!("../../../scenarios/paper-proton.toml");

/// Names accepted by [`RunConfig::bundled`].
pub const BUNDLED: [&str; 2] = ["paper-electron", "paper-proton"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Records,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Records => "records",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub format: OutputFormat,
    pub particle: ParticleBlock,
    pub trap: TrapBlock,
    pub resonator: ResonatorBlock,
    #[serde(default)]
    pub budget: BudgetBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnet: Option<MagnetBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolBlock>,
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleBlock {
    pub species: Species,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapBlock {
    /// Shared operating axial frequency.
    pub axial_frequency_hz: f64,
    pub b_field_t: f64,
    /// Bath temperature; also the axial temperature unless overridden.
    pub temperature_k: f64,
    pub logic: TrapSite,
    pub spectroscopy: TrapSite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSite {
    pub d_eff_m: f64,
    pub b2_t_per_m2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axial_temperature_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorBlock {
    pub capacitance_f: f64,
    pub resistance_ohm: f64,
    /// Resonance placed this many linewidths below the axial frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detune_linewidths: Option<f64>,
    /// Resonance placed this far below the axial frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detune_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetBlock {
    #[serde(default = "one")]
    pub threshold: f64,
}

impl Default for BudgetBlock {
    fn default() -> Self {
        Self { threshold: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

/// One axially magnetized ring, optionally rescaled to a target `B2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnetBlock {
    pub r_in_m: f64,
    pub r_out_m: f64,
    pub height_m: f64,
    #[serde(default)]
    pub center_z_m: f64,
    /// `mu_0 M`
    pub polarization_t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate_b2_t_per_m2: Option<f64>,
    #[serde(default)]
    pub calibrate_at_m: f64,
    /// Uniform background; defaults to `trap.b_field_t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_t: Option<f64>,
    #[serde(default)]
    pub logic_z_m: f64,
    pub spectroscopy_z_m: f64,
    pub z_start_m: f64,
    pub z_stop_m: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolBlock {
    pub cycles: usize,
    /// Step (iv) probability; computed from the exchange dynamics when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_fidelity: Option<f64>,
    pub pi_pulse_fidelity: f64,
    pub cooling_residual: f64,
    #[serde(default)]
    pub field_noise_per_sqrt_minute: f64,
    #[serde(default = "default_transition")]
    pub transition: Transition,
    pub cooling_s: f64,
    pub drive_s: f64,
    pub pi_pulse_s: f64,
    pub detection: DetectionBlock,
    pub drive: DriveBlock,
}

fn default_transition() -> Transition {
    Transition::Cyclotron
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionBlock {
    pub averaging_s: f64,
    /// Frequency-noise density, Hz sqrt(s).
    pub noise_density_hz_sqrt_s: f64,
    /// Threshold as a fraction of the logic bottle shift.
    #[serde(default = "half")]
    pub threshold_fraction: f64,
    #[serde(default)]
    pub overhead_s: f64,
    #[serde(default = "three")]
    pub snr: f64,
}

fn half() -> f64 {
    0.5
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveBlock {
    pub profile: BroadeningProfile,
    pub peak_probability: f64,
    #[serde(default)]
    pub intrinsic_width_hz: f64,
    /// Explicit grid. Exclusive with `span_linewidths`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detunings_hz: Option<Vec<f64>>,
    /// `[start, stop]` in units of the line width (the larger of the
    /// thermal broadening and the intrinsic width).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_linewidths: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

fn check(path: &str, ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, msg))
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    check(path, v > 0.0 && v.is_finite(), "must be positive and finite")
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    check(path, v >= 0.0 && v.is_finite(), "must be >= 0 and finite")
}

fn probability(path: &str, v: f64) -> Result<()> {
    check(path, (0.0..=1.0).contains(&v), "must lie in [0, 1]")
}

/// Re-labels a domain failure with the block it came from.
fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Domain { what, value } => Error::config(path, format!("{what} (got {value:e})")),
        other => other,
    })
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.message().to_string();
            // missing keys report the parent; name the key itself
            if let Some(key) = backticked(&message) {
                if message.starts_with("missing field") {
                    path = if path == "." { key } else { format!("{path}.{key}") };
                }
            }
            Error::config(path, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        match name {
            "paper-electron" => Self::from_toml_str(PAPER_ELECTRON),
            "paper-proton" => Self::from_toml_str(PAPER_PROTON),
            other => Err(Error::config(
                "scenario",
                format!("unknown bundled scenario `{other}` (have: {})", BUNDLED.join(", ")),
            )),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(".", e.to_string()))
    }

    /// Checks every physical value; also builds each domain object once so
    /// that derived invariants fail at load time.
    pub fn validate(&self) -> Result<()> {
        let t = &self.trap;
        positive("trap.axial_frequency_hz", t.axial_frequency_hz)?;
        check("trap.b_field_t", t.b_field_t.is_finite(), "must be finite")?;
        non_negative("trap.temperature_k", t.temperature_k)?;
        for (name, site) in [("logic", &t.logic), ("spectroscopy", &t.spectroscopy)] {
            positive(&format!("trap.{name}.d_eff_m"), site.d_eff_m)?;
            check(
                &format!("trap.{name}.b2_t_per_m2"),
                site.b2_t_per_m2.is_finite(),
                "must be finite",
            )?;
            if let Some(v) = site.axial_temperature_k {
                non_negative(&format!("trap.{name}.axial_temperature_k"), v)?;
            }
        }
        let r = &self.resonator;
        positive("resonator.capacitance_f", r.capacitance_f)?;
        positive("resonator.resistance_ohm", r.resistance_ohm)?;
        match (r.detune_linewidths, r.detune_hz) {
            (Some(v), None) => non_negative("resonator.detune_linewidths", v)?,
            (None, Some(v)) => non_negative("resonator.detune_hz", v)?,
            _ => {
                return Err(Error::config(
                    "resonator",
                    "exactly one of `detune_linewidths` and `detune_hz` is required",
                ))
            }
        }
        positive("budget.threshold", self.budget.threshold)?;
        at("resonator", crate::circuit::qls_budget(&self.budget_input()?))?;

        if let Some(m) = &self.magnet {
            check("magnet.points", m.points >= 2, "need at least two points")?;
            check(
                "magnet.z_stop_m",
                m.z_stop_m > m.z_start_m,
                "must exceed z_start_m",
            )?;
            if let Some(b2) = m.calibrate_b2_t_per_m2 {
                check("magnet.calibrate_b2_t_per_m2", b2.is_finite() && b2 != 0.0, "must be finite and nonzero")?;
            }
            self.magnet_assembly()?;
        }

        if let Some(p) = &self.protocol {
            check("protocol.cycles", p.cycles >= 1, "must be >= 1")?;
            if let Some(f) = p.swap_fidelity {
                probability("protocol.swap_fidelity", f)?;
            }
            probability("protocol.pi_pulse_fidelity", p.pi_pulse_fidelity)?;
            non_negative("protocol.cooling_residual", p.cooling_residual)?;
            non_negative("protocol.field_noise_per_sqrt_minute", p.field_noise_per_sqrt_minute)?;
            non_negative("protocol.cooling_s", p.cooling_s)?;
            non_negative("protocol.drive_s", p.drive_s)?;
            non_negative("protocol.pi_pulse_s", p.pi_pulse_s)?;
            let d = &p.detection;
            positive("protocol.detection.averaging_s", d.averaging_s)?;
            non_negative("protocol.detection.noise_density_hz_sqrt_s", d.noise_density_hz_sqrt_s)?;
            check(
                "protocol.detection.threshold_fraction",
                d.threshold_fraction > 0.0 && d.threshold_fraction <= 1.0,
                "must lie in (0, 1]",
            )?;
            non_negative("protocol.detection.overhead_s", d.overhead_s)?;
            positive("protocol.detection.snr", d.snr)?;
            let dr = &p.drive;
            probability("protocol.drive.peak_probability", dr.peak_probability)?;
            non_negative("protocol.drive.intrinsic_width_hz", dr.intrinsic_width_hz)?;
            match (&dr.detunings_hz, dr.span_linewidths, dr.points) {
                (Some(g), None, None) => check(
                    "protocol.drive.detunings_hz",
                    !g.is_empty() && g.iter().all(|x| x.is_finite()),
                    "must be a non-empty list of finite values",
                )?,
                (None, Some([a, b]), Some(n)) => {
                    check("protocol.drive.span_linewidths", b > a, "stop must exceed start")?;
                    check("protocol.drive.points", n >= 2, "need at least two points")?;
                }
                _ => {
                    return Err(Error::config(
                        "protocol.drive",
                        "give either `detunings_hz` or both `span_linewidths` and `points`",
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn particle(&self) -> Particle {
        self.particle.species.particle()
    }

    fn trap_params(&self, role: TrapRole) -> TrapParams {
        let t = &self.trap;
        let site = match role {
            TrapRole::Logic => &t.logic,
            TrapRole::Spectroscopy => &t.spectroscopy,
        };
        TrapParams {
            role,
            d_eff: site.d_eff_m,
            omega_z: hz_to_angular(t.axial_frequency_hz),
            b_field: t.b_field_t,
            b2: site.b2_t_per_m2,
            t_axial: site.axial_temperature_k.unwrap_or(t.temperature_k),
        }
    }

    pub fn logic_trap(&self) -> TrapParams {
        self.trap_params(TrapRole::Logic)
    }

    pub fn spectroscopy_trap(&self) -> TrapParams {
        self.trap_params(TrapRole::Spectroscopy)
    }

    pub fn budget_input(&self) -> Result<BudgetInput> {
        let r = &self.resonator;
        let detuning = match (r.detune_linewidths, r.detune_hz) {
            (Some(n), None) => Detuning::Linewidths(n),
            (None, Some(hz)) => Detuning::Absolute(hz_to_angular(hz)),
            _ => {
                return Err(Error::config(
                    "resonator",
                    "exactly one of `detune_linewidths` and `detune_hz` is required",
                ))
            }
        };
        Ok(BudgetInput {
            particle: self.particle(),
            logic: self.logic_trap(),
            spectroscopy: self.spectroscopy_trap(),
            capacitance: r.capacitance_f,
            resistance: r.resistance_ohm,
            detuning,
            temperature: self.trap.temperature_k,
            threshold: self.budget.threshold,
        })
    }

    /// Magnet assembly with the calibration applied.
    pub fn magnet_assembly(&self) -> Result<MagnetAssembly> {
        let m = self
            .magnet
            .as_ref()
            .ok_or_else(|| Error::config("magnet", "block required for this command"))?;
        let ring = at(
            "magnet",
            RingMagnet::with_polarization(m.r_in_m, m.r_out_m, m.height_m, m.polarization_t, m.center_z_m),
        )?;
        let ring = match m.calibrate_b2_t_per_m2 {
            Some(b2) => at("magnet.calibrate_b2_t_per_m2", ring.calibrated_to_b2(b2, m.calibrate_at_m))?,
            None => ring,
        };
        at(
            "magnet.background_t",
            MagnetAssembly::new(vec![ring], m.background_t.unwrap_or(self.trap.b_field_t)),
        )
    }

    /// Sample positions of the field profile, with the two trap centers
    /// inserted if they fall inside the range.
    pub fn field_grid(&self) -> Result<Vec<f64>> {
        let m = self
            .magnet
            .as_ref()
            .ok_or_else(|| Error::config("magnet", "block required for this command"))?;
        let n = m.points;
        let mut z: Vec<f64> = (0..n)
            .map(|i| m.z_start_m + (m.z_stop_m - m.z_start_m) * i as f64 / (n - 1) as f64)
            .collect();
        for site in [m.logic_z_m, m.spectroscopy_z_m] {
            if site >= m.z_start_m && site <= m.z_stop_m && !z.contains(&site) {
                z.push(site);
            }
        }
        z.sort_by(f64::total_cmp);
        Ok(z)
    }

    /// Builds the protocol model. Without an explicit `swap_fidelity` this
    /// integrates the exchange dynamics at the budget operating point.
    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let p = self
            .protocol
            .as_ref()
            .ok_or_else(|| Error::config("protocol", "block required for this command"))?;
        let particle = self.particle();
        let budget = at("resonator", crate::circuit::qls_budget(&self.budget_input()?))?;
        let logic = self.logic_trap();
        let spec = self.spectroscopy_trap();
        let shifts_logic = at("trap.logic", ShiftSet::for_trap(&logic, &particle))?;
        let shifts_spec = at("trap.spectroscopy", ShiftSet::for_trap(&spec, &particle))?;
        let omega_c = at(
            "trap.b_field_t",
            cyclotron_frequency(spec.b_field, particle.charge, particle.mass),
        )?;
        let swap = match p.swap_fidelity {
            Some(f) => f,
            None => at("protocol.swap_fidelity", swap_fidelity(&ExchangeParams::from_budget(&budget)))?,
        };

        let d = &p.detection;
        let detection = DetectionModel {
            averaging_time: d.averaging_s,
            noise_density: hz_to_angular(d.noise_density_hz_sqrt_s),
            threshold: d.threshold_fraction * shifts_logic.delta.abs(),
            overhead: d.overhead_s,
            snr: d.snr,
        };

        let dr = &p.drive;
        let intrinsic = hz_to_angular(dr.intrinsic_width_hz);
        let detunings = match (&dr.detunings_hz, dr.span_linewidths, dr.points) {
            (Some(g), _, _) => g.iter().map(|&x| hz_to_angular(x)).collect(),
            (None, Some([a, b]), Some(n)) => {
                let unit = shifts_spec.broadening.max(intrinsic);
                check(
                    "protocol.drive.span_linewidths",
                    unit > 0.0,
                    "line width is zero; give `detunings_hz` instead",
                )?;
                (0..n)
                    .map(|i| unit * (a + (b - a) * i as f64 / (n - 1) as f64))
                    .collect()
            }
            _ => return Err(Error::config("protocol.drive", "no detuning grid")),
        };

        at(
            "protocol",
            ProtocolConfig::new(
                budget,
                shifts_logic,
                shifts_spec,
                omega_c,
                swap,
                p.pi_pulse_fidelity,
                p.cooling_residual,
                detection,
                DriveModel {
                    detunings,
                    peak_probability: dr.peak_probability,
                    intrinsic_width: intrinsic,
                    profile: dr.profile,
                },
                p.field_noise_per_sqrt_minute,
                StageDurations {
                    cooling: p.cooling_s,
                    drive: p.drive_s,
                    pi_pulse: p.pi_pulse_s,
                },
                p.transition,
                p.cycles,
                self.seed,
            ),
        )
    }

    /// Checks the analytic gradients against the finite-difference oracle at
    /// `z`, for the flag column of the field profile.
    pub fn field_check(&self, assembly: &MagnetAssembly, z: f64) -> Option<bool> {
        gradients_agree(assembly, z, 1e-6).ok()
    }
}

fn backticked(s: &str) -> Option<String> {
    let start = s.find('`')? + 1;
    let len = s[start..].find('`')?;
    Some(s[start..start + len].to_string())
}
