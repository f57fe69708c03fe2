//! Monte Carlo of the seven-step logic-spectroscopy sequence.
//!
//! One cycle:
//!
//! 1. both axial modes are sideband-cooled, leaving a residual occupation;
//! 2. the spectroscopy drive excites `n_c = 0 -> 1` with a probability set by
//!    the broadened line profile at the current detuning;
//! 3. a red-sideband pi-pulse maps the cyclotron quantum onto the axial mode;
//! 4. the wire swaps the axial quantum to the logic trap;
//! 5. a second pi-pulse maps it onto the logic cyclotron mode;
//! 6. the logic axial frequency is measured and compared with a threshold;
//! 7. bookkeeping and reset.
//!
//! Stage failures are silent: nothing is heralded before step 6.
//!
//! Lineshape scans give every detuning point its own RNG stream derived from
//! `(seed, point index)`, so points can run in parallel without changing
//! results.

use std::io::Write;
use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::ExchangeBudget;
use crate::spectroscopy::{axial_frequency, QuantumNumbers, ShiftSet, Spin};
use crate::constants::CODATA_2018;
use crate::{Error, Result};

/// Shape of the thermal broadening convolved with the drive response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BroadeningProfile {
    /// One-sided exponential above the line, 1/e width equal to the
    /// broadening (Boltzmann-distributed axial energy).
    Exponential,
    /// Symmetric Gaussian with rms equal to the broadening.
    Gaussian,
}

/// Which spectroscopy transition the drive addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    /// `|0, m_s> -> |1, m_s>`
    Cyclotron,
    /// `|0, +1/2> -> |1, -1/2>`
    Anomaly,
}

impl Transition {
    /// Axial-frequency change of the spectroscopy particle for this
    /// transition, from the bottle ladder.
    pub fn spectroscopy_shift(self, delta: f64) -> f64 {
        let g = CODATA_2018.g_e;
        let (before, after) = match self {
            Transition::Cyclotron => (
                QuantumNumbers::new(0, Spin::Up, 0),
                QuantumNumbers::new(1, Spin::Up, 0),
            ),
            Transition::Anomaly => (
                QuantumNumbers::new(0, Spin::Up, 0),
                QuantumNumbers::new(1, Spin::Down, 0),
            ),
        };
        axial_frequency(after, 0.0, delta, g) - axial_frequency(before, 0.0, delta, g)
    }
}

/// Spectroscopy drive.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveModel {
    /// Drive detunings from the unperturbed line, rad/s.
    pub detunings: Vec<f64>,
    /// Excitation probability at the peak of the broadened line.
    pub peak_probability: f64,
    /// rms width of the bare (unbroadened) Gaussian drive response, rad/s.
    pub intrinsic_width: f64,
    pub profile: BroadeningProfile,
}

/// Axial-frequency readout of the logic trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    /// s
    pub averaging_time: f64,
    /// White frequency-noise density, (rad/s) sqrt(s).
    pub noise_density: f64,
    /// Jump declared when the measured shift reaches this, rad/s.
    pub threshold: f64,
    /// Fixed per-measurement cost (switching, resonator ring-up), s.
    pub overhead: f64,
    /// Required separation of threshold from each hypothesis, in sigmas.
    pub snr: f64,
}

impl DetectionModel {
    /// `sigma(tau) = noise_density / sqrt(tau)`
    pub fn sigma(&self) -> f64 {
        if self.noise_density == 0.0 {
            0.0
        } else {
            self.noise_density / self.averaging_time.sqrt()
        }
    }

    /// Averaging time that puts a `delta/2` threshold `snr` sigmas from both
    /// hypotheses: `(2 snr noise / delta)^2`.
    pub fn required_averaging_time(&self, delta: f64) -> f64 {
        let r = 2.0 * self.snr * self.noise_density / delta.abs();
        r * r
    }

    /// Noise-limited averaging time plus the fixed overhead.
    pub fn detection_time(&self, delta: f64) -> f64 {
        self.required_averaging_time(delta) + self.overhead
    }

    /// Ratio of detection times when the bottle shift grows from
    /// `delta_ref` to `delta_new`.
    pub fn speedup(&self, delta_ref: f64, delta_new: f64) -> f64 {
        self.detection_time(delta_ref) / self.detection_time(delta_new)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageDurations {
    /// Sideband cooling, s.
    pub cooling: f64,
    /// Spectroscopy drive, s.
    pub drive: f64,
    /// One sideband pi-pulse, s.
    pub pi_pulse: f64,
}

/// Everything one protocol run needs.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub budget: ExchangeBudget,
    pub shifts_logic: ShiftSet,
    pub shifts_spectroscopy: ShiftSet,
    /// Spectroscopy-trap cyclotron frequency, rad/s (scales field noise).
    pub cyclotron_frequency: f64,
    /// Step (iv) success probability.
    pub swap_fidelity: f64,
    /// Success probability of each sideband pi-pulse.
    pub pi_pulse_fidelity: f64,
    /// Residual mean axial occupation after step (i).
    pub cooling_residual: f64,
    pub detection: DetectionModel,
    pub drive: DriveModel,
    /// Random-walk `dB/B` per sqrt(minute).
    pub field_noise: f64,
    pub durations: StageDurations,
    pub transition: Transition,
    /// Cycles per detuning point.
    pub cycles: usize,
    pub seed: u64,
    norm: OnceLock<((BroadeningProfile, u64, u64), f64)>,
}

impl ProtocolConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        budget: ExchangeBudget,
        shifts_logic: ShiftSet,
        shifts_spectroscopy: ShiftSet,
        cyclotron_frequency: f64,
        swap_fidelity: f64,
        pi_pulse_fidelity: f64,
        cooling_residual: f64,
        detection: DetectionModel,
        drive: DriveModel,
        field_noise: f64,
        durations: StageDurations,
        transition: Transition,
        cycles: usize,
        seed: u64,
    ) -> Result<Self> {
        let c = Self {
            budget,
            shifts_logic,
            shifts_spectroscopy,
            cyclotron_frequency,
            swap_fidelity,
            pi_pulse_fidelity,
            cooling_residual,
            detection,
            drive,
            field_noise,
            durations,
            transition,
            cycles,
            seed,
            norm: OnceLock::new(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |what: &'static str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::domain(what, p))
            }
        };
        prob("swap fidelity must lie in [0, 1]", self.swap_fidelity)?;
        prob("pi-pulse fidelity must lie in [0, 1]", self.pi_pulse_fidelity)?;
        prob("peak excitation probability must lie in [0, 1]", self.drive.peak_probability)?;
        if self.cycles < 1 {
            return Err(Error::domain("cycles must be >= 1", self.cycles as f64));
        }
        if !(self.cooling_residual >= 0.0) {
            return Err(Error::domain("cooling residual must be >= 0", self.cooling_residual));
        }
        let delta = self.shifts_logic.delta.abs();
        let thr = self.detection.threshold;
        if !(thr > 0.0 && thr <= delta) {
            return Err(Error::domain(
                "detection threshold must lie in (0, logic bottle shift]",
                thr,
            ));
        }
        if !(self.detection.averaging_time > 0.0) {
            return Err(Error::domain("averaging time must be positive", self.detection.averaging_time));
        }
        for (what, v) in [
            ("noise density must be >= 0", self.detection.noise_density),
            ("detection overhead must be >= 0", self.detection.overhead),
            ("field noise must be >= 0", self.field_noise),
            ("intrinsic drive width must be >= 0", self.drive.intrinsic_width),
            ("cooling time must be >= 0", self.durations.cooling),
            ("drive time must be >= 0", self.durations.drive),
            ("pi-pulse time must be >= 0", self.durations.pi_pulse),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(what, v));
            }
        }
        if self.drive.detunings.is_empty() {
            return Err(Error::domain("detuning grid must be non-empty", 0.0));
        }
        Ok(())
    }

    /// Probability that a spectroscopy axial mode is not in its ground state
    /// after cooling.
    pub fn residual_excitation(&self) -> f64 {
        self.cooling_residual / (1.0 + self.cooling_residual)
    }

    /// Thermal cyclotron linewidth of the spectroscopy trap, rad/s.
    pub fn broadening(&self) -> f64 {
        self.shifts_spectroscopy.broadening
    }

    /// Step (ii) excitation probability at detuning `x` (rad/s).
    pub fn excitation_probability(&self, x: f64) -> f64 {
        let s = self.drive.intrinsic_width;
        let w = self.broadening();
        let peak = self.drive.peak_probability;
        let shape = |x: f64| profile_density(self.drive.profile, x, s, w);
        // Cached per (profile, widths); public fields may change after first use.
        let key = (self.drive.profile, s.to_bits(), w.to_bits());
        let compute = || profile_peak(self.drive.profile, s, w, &shape);
        let cached = self.norm.get_or_init(|| (key, compute()));
        let norm = if cached.0 == key { cached.1 } else { compute() };
        if norm == 0.0 {
            return 0.0;
        }
        (peak * shape(x) / norm).clamp(0.0, 1.0)
    }

    pub fn timing_budget(&self) -> TimingBudget {
        timing_budget(self)
    }
}

/// Unnormalized line profile: bare Gaussian drive of rms `s` convolved with
/// the broadening of width `w`. Degenerate widths collapse to the remaining
/// factor (or a delta at zero).
fn profile_density(profile: BroadeningProfile, x: f64, s: f64, w: f64) -> f64 {
    match profile {
        BroadeningProfile::Gaussian => {
            let sigma = (s * s + w * w).sqrt();
            if sigma == 0.0 {
                return if x == 0.0 { 1.0 } else { 0.0 };
            }
            (-0.5 * (x / sigma).powi(2)).exp()
        }
        BroadeningProfile::Exponential => match (s > 0.0, w > 0.0) {
            (false, false) => {
                if x == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            (true, false) => (-0.5 * (x / s).powi(2)).exp(),
            (false, true) => {
                if x >= 0.0 {
                    (-x / w).exp()
                } else {
                    0.0
                }
            }
            (true, true) => exp_modified_gaussian(x, s, w),
        },
    }
}

/// Density of `G + E`, `G ~ N(0, s^2)`, `E ~ Exp(mean w)`.
fn exp_modified_gaussian(x: f64, s: f64, w: f64) -> f64 {
    let b = (s * s / w - x) / (std::f64::consts::SQRT_2 * s);
    let gauss = (-0.5 * (x / s).powi(2)).exp();
    let val = if b >= 0.0 {
        gauss * erfcx(b)
    } else {
        // erfc(b) = 2 - erfc(-b) for negative arguments
        2.0 * (0.5 * (s / w).powi(2) - x / w).exp() - gauss * erfcx(-b)
    };
    val / (2.0 * w)
}

/// Scaled complementary error function `exp(x^2) erfc(x)` for `x >= 0`.
fn erfcx(x: f64) -> f64 {
    if x < 8.0 {
        (x * x).exp() * statrs::function::erf::erfc(x)
    } else {
        // Asymptotic series; relative error below 1e-8 for x >= 8.
        let inv = 1.0 / (x * x);
        let series = 1.0 - 0.5 * inv + 0.75 * inv * inv - 1.875 * inv.powi(3) + 6.5625 * inv.powi(4);
        series / (x * std::f64::consts::PI.sqrt())
    }
}

fn profile_peak(profile: BroadeningProfile, s: f64, w: f64, shape: &dyn Fn(f64) -> f64) -> f64 {
    match profile {
        BroadeningProfile::Gaussian => 1.0,
        BroadeningProfile::Exponential if s == 0.0 || w == 0.0 => 1.0,
        BroadeningProfile::Exponential => {
            // Unimodal; the mode lies in [-s, s^2/w + s]. Coarse scan then
            // golden-section refinement.
            let (lo, hi) = (-2.0 * s, s * s / w + 2.0 * s);
            let n = 512;
            let mut best = lo;
            for i in 0..=n {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                if shape(x) > shape(best) {
                    best = x;
                }
            }
            let step = (hi - lo) / n as f64;
            let (mut a, mut b) = (best - step, best + step);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let c = b - phi * (b - a);
                let d = a + phi * (b - a);
                if shape(c) > shape(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            shape(0.5 * (a + b))
        }
    }
}

/// Outcome of one cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolRecord {
    pub cycle: u64,
    pub detuning_rad_s: f64,
    /// Field-noise offset of the line at this cycle, rad/s.
    pub drift_rad_s: f64,
    /// Spectroscopy axial mode reached its ground state in step (i).
    pub cooled: bool,
    /// `n_c^S` after the drive.
    pub n_c_spectroscopy: u8,
    pub spin_flipped: bool,
    /// Step (iii); empty when not attempted.
    pub step3_transfer: Option<bool>,
    /// Step (iv); empty when the spectroscopy axial mode held no quantum.
    pub step4_exchange: Option<bool>,
    /// Step (v); empty when the logic axial mode held no quantum.
    pub step5_transfer: Option<bool>,
    /// `n_c^L` read out in step (vi).
    pub n_c_logic: u8,
    pub measured_shift_rad_s: f64,
    pub declared_jump: bool,
    pub duration_s: f64,
}

/// Runs one cycle at `detuning` with the line offset by `drift`.
fn cycle<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    index: u64,
    detuning: f64,
    drift: f64,
    rng: &mut R,
) -> ProtocolRecord {
    // Fixed draw count per cycle: streams stay aligned across configs, so
    // raising any stage probability can only add jumps on the same seed.
    let u: [f64; 5] = std::array::from_fn(|_| rng.gen::<f64>());
    let z: f64 = StandardNormal.sample(rng);

    let residual = u[0] < config.residual_excitation();
    let excited = u[1] < config.excitation_probability(detuning - drift);

    let step3 = excited.then_some(u[2] < config.pi_pulse_fidelity);
    let spec_axial = step3.unwrap_or(false) || residual;

    let step4 = spec_axial.then_some(u[3] < config.swap_fidelity);
    let logic_axial = step4.unwrap_or(false);

    let step5 = logic_axial.then_some(u[4] < config.pi_pulse_fidelity);
    let n_c_logic = u8::from(step5.unwrap_or(false));

    let noise = config.detection.sigma() * z;
    let measured = config.shifts_logic.delta.abs() * n_c_logic as f64 + noise;

    ProtocolRecord {
        cycle: index,
        detuning_rad_s: detuning,
        drift_rad_s: drift,
        cooled: !residual,
        n_c_spectroscopy: u8::from(excited),
        spin_flipped: excited && config.transition == Transition::Anomaly,
        step3_transfer: step3,
        step4_exchange: step4,
        step5_transfer: step5,
        n_c_logic,
        measured_shift_rad_s: measured,
        declared_jump: measured >= config.detection.threshold,
        duration_s: config.timing_budget().total,
    }
}

/// One cycle with no accumulated field drift.
pub fn run_cycle<R: Rng + ?Sized>(config: &ProtocolConfig, detuning: f64, rng: &mut R) -> ProtocolRecord {
    cycle(config, 0, detuning, 0.0, rng)
}

/// RNG stream for detuning point `index`.
pub fn point_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `cycles` consecutive cycles at one detuning with a field random walk
/// starting from zero, passing each record to `sink`.
pub fn run_point(
    config: &ProtocolConfig,
    index: usize,
    cycles: usize,
    stream: u64,
    mut sink: impl FnMut(&ProtocolRecord),
) {
    let detuning = config.drive.detunings[index];
    let mut rng = point_rng(config.seed, stream);
    let step = config.cyclotron_frequency
        * config.field_noise
        * (config.timing_budget().total / 60.0).sqrt();
    let mut drift = 0.0;
    for c in 0..cycles {
        let rec = cycle(config, c as u64, detuning, drift, &mut rng);
        sink(&rec);
        let kick: f64 = StandardNormal.sample(&mut rng);
        drift += step * kick;
    }
}

/// Full record stream: every point in grid order, `cycles` each.
pub fn record_stream(config: &ProtocolConfig) -> Vec<ProtocolRecord> {
    let per_point: Vec<Vec<ProtocolRecord>> = (0..config.drive.detunings.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::with_capacity(config.cycles);
            run_point(config, i, config.cycles, i as u64, |r| out.push(r.clone()));
            out
        })
        .collect();
    per_point.into_iter().flatten().collect()
}

/// Excitation-fraction spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Lineshape {
    pub detunings: Vec<f64>,
    pub fractions: Vec<f64>,
    /// Binomial standard error per point.
    pub errors: Vec<f64>,
    pub jumps: Vec<u64>,
    pub cycles: usize,
}

/// Moment estimate of a lineshape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    /// Weighted mean detuning, rad/s.
    pub center: f64,
    /// Weighted rms spread about the center, rad/s.
    pub width: f64,
    pub jump_rate: f64,
}

impl Lineshape {
    fn from_counts(detunings: Vec<f64>, jumps: Vec<u64>, cycles: usize) -> Self {
        let n = cycles as f64;
        let fractions: Vec<f64> = jumps.iter().map(|&j| j as f64 / n).collect();
        let errors = fractions.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
        Self {
            detunings,
            fractions,
            errors,
            jumps,
            cycles,
        }
    }

    /// Center of mass and rms width of the baseline-subtracted fractions.
    ///
    /// The baseline is the lower of the mean fractions over the first and
    /// last tenth of the grid (at least three points each), so the grid must
    /// extend past the line on at least one side. Weights are not clipped at
    /// zero; clipping would turn baseline noise into spurious width.
    pub fn fit(&self) -> LineFit {
        let m = self.fractions.len();
        let k = (m / 10).max(3).min(m);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let base = mean(&self.fractions[..k]).min(mean(&self.fractions[m - k..]));
        let weights: Vec<f64> = self.fractions.iter().map(|f| f - base).collect();
        let total: f64 = weights.iter().sum();
        let jump_rate = self.jumps.iter().sum::<u64>() as f64 / (self.cycles * self.jumps.len()) as f64;
        if !(total > 0.0) {
            return LineFit {
                center: f64::NAN,
                width: f64::NAN,
                jump_rate,
            };
        }
        let center = weights.iter().zip(&self.detunings).map(|(w, x)| w * x).sum::<f64>() / total;
        let var = weights
            .iter()
            .zip(&self.detunings)
            .map(|(w, x)| w * (x - center).powi(2))
            .sum::<f64>()
            / total;
        LineFit {
            center,
            width: if var > 0.0 { var.sqrt() } else { f64::NAN },
            jump_rate,
        }
    }

    pub fn rows(&self) -> Vec<LineshapeRow> {
        (0..self.detunings.len())
            .map(|i| LineshapeRow {
                detuning_rad_s: self.detunings[i],
                excitation_fraction: self.fractions[i],
                stderr: self.errors[i],
                jumps: self.jumps[i],
                cycles: self.cycles,
            })
            .collect()
    }

    /// CSV with a unit-bearing header; `summary` rows are appended as
    /// `# key=value` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W, summary: Option<&LineFit>) -> Result<()> {
        {
            let mut w = csv::Writer::from_writer(&mut out);
            for r in self.rows() {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        if let Some(fit) = summary {
            writeln!(out, "# jump_rate={}", fit.jump_rate)?;
            writeln!(out, "# fitted_center_rad_s={}", fit.center)?;
            writeln!(out, "# fitted_width_rad_s={}", fit.width)?;
        }
        Ok(())
    }

    /// Rebuilds the spectrum from a [`record_stream`] of `config`.
    pub fn from_records(config: &ProtocolConfig, records: &[ProtocolRecord]) -> Self {
        let jumps = records
            .chunks(config.cycles)
            .map(|c| c.iter().filter(|r| r.declared_jump).count() as u64)
            .collect();
        Self::from_counts(config.drive.detunings.clone(), jumps, config.cycles)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineshapeRow {
    pub detuning_rad_s: f64,
    pub excitation_fraction: f64,
    pub stderr: f64,
    pub jumps: u64,
    pub cycles: usize,
}

/// Per-point excitation fractions over `config.cycles` cycles.
pub fn lineshape_scan(config: &ProtocolConfig) -> Lineshape {
    scan_with(config, config.cycles, 0)
}

fn scan_with(config: &ProtocolConfig, cycles: usize, stream_offset: u64) -> Lineshape {
    let jumps: Vec<u64> = (0..config.drive.detunings.len())
        .into_par_iter()
        .map(|i| {
            let mut count = 0u64;
            run_point(config, i, cycles, stream_offset + i as u64, |r| {
                count += u64::from(r.declared_jump)
            });
            count
        })
        .collect();
    Lineshape::from_counts(config.drive.detunings.clone(), jumps, cycles)
}

/// Write records as CSV.
pub fn write_records_csv<W: Write>(records: &[ProtocolRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Stage durations of one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingBudget {
    pub cooling: f64,
    pub drive: f64,
    /// Both pi-pulses.
    pub pi_pulses: f64,
    pub exchange: f64,
    /// Averaging time plus overhead.
    pub detection: f64,
    pub total: f64,
    /// Cycles per second.
    pub throughput: f64,
    pub exchange_dominates: bool,
}

pub fn timing_budget(config: &ProtocolConfig) -> TimingBudget {
    let d = &config.durations;
    let detection = config.detection.averaging_time + config.detection.overhead;
    let pi_pulses = 2.0 * d.pi_pulse;
    let exchange = config.budget.t_ex;
    let total = d.cooling + d.drive + pi_pulses + exchange + detection;
    let others = d.cooling.max(d.drive).max(pi_pulses).max(detection);
    TimingBudget {
        cooling: d.cooling,
        drive: d.drive,
        pi_pulses,
        exchange,
        detection,
        total,
        throughput: 1.0 / total,
        exchange_dominates: exchange > others,
    }
}

/// Monte Carlo projection of line-center scatter over a measurement campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenterProjection {
    pub duration_s: f64,
    pub cycles_per_point: usize,
    pub replicas: usize,
    /// Standard deviation of the fitted center across replicas, rad/s.
    pub center_std_rad_s: f64,
    /// `center_std / omega_c`
    pub relative: f64,
}

/// Splits `duration` of cycles evenly over the grid, repeats the scan
/// `replicas` times on independent streams, and reports the scatter of the
/// fitted center.
pub fn center_projection(config: &ProtocolConfig, duration: f64, replicas: usize) -> Result<CenterProjection> {
    if replicas < 2 {
        return Err(Error::domain("need at least two replicas", replicas as f64));
    }
    let points = config.drive.detunings.len();
    let total_cycles = (duration / timing_budget(config).total).floor() as usize;
    let per_point = (total_cycles / points).max(1);
    let centers: Vec<f64> = (0..replicas)
        .map(|r| {
            let offset = ((r as u64) + 1) << 32;
            scan_with(config, per_point, offset).fit().center
        })
        .filter(|c| c.is_finite())
        .collect();
    if centers.len() < 2 {
        return Err(Error::domain("too few replicas produced a line", centers.len() as f64));
    }
    let n = centers.len() as f64;
    let mean = centers.iter().sum::<f64>() / n;
    let var = centers.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    Ok(CenterProjection {
        duration_s: duration,
        cycles_per_point: per_point,
        replicas,
        center_std_rad_s: std,
        relative: std / config.cyclotron_frequency,
    })
}
