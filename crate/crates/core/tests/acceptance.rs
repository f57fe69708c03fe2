//! Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion (plus a
//! few informational lines) straight to stdout, then fails if any criterion
//! failed.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

use qls_core::circuit::{equivalent_inductance, qls_budget, ExchangeBudget};
use qls_core::config::RunConfig;
use qls_core::constants::{cyclotron_frequency, hz_to_angular, Particle, CODATA_2018};
use qls_core::dynamics::{
    evolve, swap_fidelity, swap_fidelity_with, ExchangeParams, Propagator, TwoModeState,
};
use qls_core::magnetics::{
    finite_difference_gradients, gradients, on_axis_field, suggested_step, RingMagnet,
    COBALT_IRON_MU0_M,
};
use qls_core::protocol::{
    center_projection, lineshape_scan, record_stream, write_records_csv, ProtocolConfig,
};
use qls_core::spectroscopy::{bottle_delta, heating_rate, relativistic_delta, HeatingModel};

struct Line {
    id: u32,
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn scenario(name: &str) -> RunConfig {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    RunConfig::load(&Path::new(dir).join(format!("{name}.toml"))).unwrap()
}

fn electron_budget() -> ExchangeBudget {
    qls_budget(&scenario("paper-electron").budget_input().unwrap()).unwrap()
}

fn c1() -> Line {
    let b = electron_budget();
    Line {
        id: 1,
        pass: rel(b.t_ex, 0.160) <= 0.05,
        detail: format!("exchange time t_ex = {:.4} s (target 0.160 s +-5%)", b.t_ex),
    }
}

fn c2() -> Line {
    let b = electron_budget();
    Line {
        id: 2,
        pass: rel(b.figure, 0.098) <= 0.05,
        detail: format!("QLS figure t_ex*n_bar*gamma = {:.5} (target 0.098 +-5%)", b.figure),
    }
}

fn c3() -> Line {
    let b = electron_budget();
    Line {
        id: 3,
        pass: (b.n_bar - 0.62).abs() <= 0.02,
        detail: format!("thermal occupation n_bar(200 MHz, 10 mK) = {:.4} (target 0.62 +-0.02)", b.n_bar),
    }
}

fn c4() -> Line {
    let q = electron_budget().resonator.quality_factor();
    Line {
        id: 4,
        pass: rel(q, 6000.0) <= 0.10,
        detail: format!("resonator Q = {q:.1} (target 6000 +-10%)"),
    }
}

fn c5() -> Line {
    let e = Particle::electron();
    let wz = hz_to_angular(200e6);
    let d = bottle_delta(9000.0, wz, &e).unwrap();
    let d30 = bottle_delta(30.0 * 9000.0, wz, &e).unwrap();
    let ratio = d30 / d;
    Line {
        id: 5,
        pass: rel(d, 2.0 * PI * 23.0) <= 0.05 && (ratio - 30.0).abs() <= 1e-12,
        detail: format!(
            "bottle shift delta/2pi = {:.3} Hz (target 23 Hz +-5%), 30x B2 ratio = {ratio}",
            d / (2.0 * PI)
        ),
    }
}

fn c6() -> Line {
    let e = Particle::electron();
    let wz = hz_to_angular(200e6);
    let wc = cyclotron_frequency(6.0, e.charge, e.mass).unwrap();
    let d = relativistic_delta(wc, wz, e.mass).unwrap();
    let frac = d.abs() / wz;
    Line {
        id: 6,
        pass: rel(d, -2.0 * PI * 0.14) <= 0.05 && (0.5e-9..=2e-9).contains(&frac),
        detail: format!(
            "relativistic shift delta_rel/2pi = {:.4} Hz (target -0.14 Hz +-5%), |delta_rel|/omega_z = {frac:.3e}",
            d / (2.0 * PI)
        ),
    }
}

fn c7() -> Line {
    let ring = RingMagnet::with_polarization(5e-3, 15e-3, 5e-3, COBALT_IRON_MU0_M, 0.0)
        .unwrap()
        .calibrated_to_b2(9000.0, 0.0)
        .unwrap();
    let (_, b2_far) = gradients(&ring, 0.05).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z: f64 = rng.gen_range(-0.1..0.1);
        let (b1, b2) = gradients(&ring, z).unwrap();
        let (f1, f2) = finite_difference_gradients(
            |x| on_axis_field(&ring, x).unwrap(),
            z,
            suggested_step(&ring, z),
        )
        .unwrap();
        worst = worst.max(((b1 - f1) / b1).abs()).max(((b2 - f2) / b2).abs());
    }
    Line {
        id: 7,
        pass: (2.0..=8.0).contains(&b2_far) && worst <= 1e-6,
        detail: format!(
            "field profile B2(5 cm) = {b2_far:.3} T/m^2 (window [2, 8]), worst analytic-vs-FD error {worst:.2e} at 20 points (<= 1e-6)"
        ),
    }
}

fn c8() -> Line {
    let g = heating_rate(
        &HeatingModel::default(),
        hz_to_angular(200e6),
        1e-3,
        0.01,
        &Particle::electron(),
    )
    .unwrap();
    Line {
        id: 8,
        pass: g < 1.0,
        detail: format!("heating rate Gamma_h(200 MHz, 1 mm, 10 mK) = {g:.4} quanta/s (< 1)"),
    }
}

fn c9() -> Line {
    let t0 = Instant::now();
    let params = ExchangeParams::from_budget(&electron_budget());
    let rk = swap_fidelity(&params).unwrap();
    let ex = swap_fidelity_with(&params, 4, Propagator::Exponential).unwrap();
    let agree = (rk - ex).abs();

    let ideal = swap_fidelity(&ExchangeParams::ideal(params.omega_ex)).unwrap();

    let start = TwoModeState::fock(4, 1, 0).unwrap();
    let trace_err = [0.02, 0.08, 0.16]
        .iter()
        .map(|&t| (evolve(&start, &params, t).unwrap().trace().re - 1.0).abs())
        .fold(0.0, f64::max);

    let mut lossless = ExchangeParams::ideal(params.omega_ex);
    lossless.detuning = 2.0;
    let two = TwoModeState::fock(4, 1, 1).unwrap();
    let cons_err = [0.05, 0.16, 0.7]
        .iter()
        .map(|&t| {
            let (a, b) = evolve(&two, &lossless, t).unwrap().mean_quanta();
            (a + b - 2.0).abs()
        })
        .fold(0.0, f64::max);

    // Single damped mode at n_bar = 0.2: the truncated n_max = 4 space holds
    // the paper's 0.62 only to ~7%.
    let damped = ExchangeParams {
        omega_ex: 0.0,
        gamma_logic: params.gamma_logic,
        gamma_spectroscopy: 0.0,
        n_bar: 0.2,
        detuning: 0.0,
    };
    let steady = evolve(&TwoModeState::fock(4, 0, 0).unwrap(), &damped, 12.0 / damped.gamma_logic)
        .unwrap()
        .mean_quanta()
        .1;
    let elapsed = t0.elapsed().as_secs_f64();

    Line {
        id: 9,
        pass: agree <= 1e-8
            && (ideal - 1.0).abs() <= 1e-6
            && trace_err <= 1e-9
            && cons_err <= 1e-8
            && rel(steady, 0.2) <= 0.01
            && elapsed < 10.0,
        detail: format!(
            "dynamics: RK4 vs expm {agree:.1e}, ideal swap {ideal:.9}, trace err {trace_err:.1e}, quanta err {cons_err:.1e}, steady <n> {steady:.5} vs 0.2, {elapsed:.2} s"
        ),
    }
}

/// Expected jump probability from independent per-stage Bernoulli factors.
fn closed_form(c: &ProtocolConfig, x: f64) -> f64 {
    let p_sig = c.excitation_probability(x) * c.pi_pulse_fidelity;
    let p_th = c.cooling_residual / (1.0 + c.cooling_residual);
    let p_logic = (1.0 - (1.0 - p_sig) * (1.0 - p_th)) * c.swap_fidelity * c.pi_pulse_fidelity;
    let sigma = c.detection.sigma();
    let thr = c.detection.threshold;
    let above = |mean: f64| 1.0 - Normal::new(mean, sigma).unwrap().cdf(thr);
    p_logic * above(c.shifts_logic.delta.abs()) + (1.0 - p_logic) * above(0.0)
}

fn c10() -> Line {
    let t0 = Instant::now();
    let cfg = scenario("paper-electron").protocol_config().unwrap();
    let ls = lineshape_scan(&cfg);
    let n = cfg.cycles as f64 * ls.detunings.len() as f64;
    let expected = ls.detunings.iter().map(|&x| closed_form(&cfg, x)).sum::<f64>() / ls.detunings.len() as f64;
    let got = ls.fit().jump_rate;
    let sigma = (expected * (1.0 - expected) / n).sqrt();
    let z = (got - expected) / sigma;

    let csv = |c: &ProtocolConfig| {
        let mut out = Vec::new();
        write_records_csv(&record_stream(c), &mut out).unwrap();
        out
    };
    let identical = csv(&cfg) == csv(&cfg);
    let elapsed = t0.elapsed().as_secs_f64();
    Line {
        id: 10,
        pass: z.abs() <= 3.0 && identical && elapsed < 60.0,
        detail: format!(
            "protocol MC: jump rate {got:.5} vs closed form {expected:.5} ({z:+.2} sigma, {} cycles/point), byte-identical CSV {identical}, {elapsed:.1} s",
            cfg.cycles
        ),
    }
}

fn c11() -> Line {
    let width = |name: &str, seed: u64| {
        let mut rc = scenario(name);
        rc.seed = seed;
        rc.protocol.as_mut().unwrap().cycles = 100_000;
        lineshape_scan(&rc.protocol_config().unwrap()).fit().width
    };
    let narrow = width("paper-electron", 11);
    let wide = width("legacy-bottle", 12);
    let ratio = wide / narrow;
    Line {
        id: 11,
        pass: rel(ratio, 75.0) <= 0.10,
        detail: format!(
            "linewidth scaling: fitted widths {narrow:.4e} (4 T/m^2) and {wide:.4e} rad/s (300 T/m^2), ratio {ratio:.2} (target 75 +-10%)"
        ),
    }
}

fn c12() -> Line {
    let rc = scenario("paper-proton");
    let b = qls_budget(&rc.budget_input().unwrap()).unwrap();
    let l_p = equivalent_inductance(1e-3, &Particle::proton());
    let l_e = equivalent_inductance(1e-3, &Particle::electron());
    let ratio = l_p / l_e;
    let k = CODATA_2018;
    let exact = k.m_p / k.m_e;
    Line {
        id: 12,
        pass: b.n_bar >= 100.0 && !b.feasible && rel(ratio, exact) <= 1e-12,
        detail: format!(
            "proton preset: n_bar(1 MHz, 10 mK) = {:.1} (>= 100), figure {:.2} -> infeasible warning, l_p/l_e = {ratio:.4} (m_p/m_e = {exact:.4}; quoted as ~2000)",
            b.n_bar, b.figure
        ),
    }
}

fn info() -> Vec<String> {
    let cfg = scenario("paper-electron").protocol_config().unwrap();
    let t = cfg.timing_budget();
    let delta = cfg.shifts_logic.delta;
    let speed = cfg.detection.speedup(delta / 30.0, delta);
    let mut lines = vec![
        format!(
            "info: cycle {:.3} s (exchange {:.3}, detection {:.3}, cooling {:.3}), exchange dominates: {}",
            t.total, t.exchange, t.detection, t.cooling, t.exchange_dominates
        ),
        format!("info: detection speedup for 30x larger shift = {speed:.1} (quoted: about 20)"),
        format!("info: swap fidelity at the budget operating point = {:.4}", cfg.swap_fidelity),
    ];
    for noise in [0.0, 1e-10] {
        let mut rc = scenario("paper-electron");
        rc.protocol.as_mut().unwrap().field_noise_per_sqrt_minute = noise;
        let p = rc.protocol_config().unwrap();
        if let Ok(proj) = center_projection(&p, 86400.0, 8) {
            lines.push(format!(
                "info: one-day line-center scatter, field walk {noise:e}/sqrt(min): {:.2e} rad/s = {:.1e} of omega_c (order of magnitude only)",
                proj.center_std_rad_s, proj.relative
            ));
        }
    }
    lines
}

#[test]
fn acceptance_criteria() {
    let checks: [fn() -> Line; 12] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12];
    let lines: Vec<Line> = checks.iter().map(|f| f()).collect();
    let mut out = std::io::stdout().lock();
    for l in &lines {
        writeln!(
            out,
            "criterion {:>2}: {} | {}",
            l.id,
            if l.pass { "PASS" } else { "FAIL" },
            l.detail
        )
        .unwrap();
    }
    for l in info() {
        writeln!(out, "{l}").unwrap();
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
