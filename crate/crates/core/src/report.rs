//! Tabular outputs: budget report, field profile, and parameter sweeps.
//!
//! Each report is written either as CSV with a unit-bearing header or as
//! JSON lines (`records`).

use std::io::Write;

use serde::Serialize;

use crate::circuit::{qls_budget, ExchangeBudget};
use crate::config::{OutputFormat, RunConfig};
use crate::magnetics::MagnetAssembly;
use crate::protocol::lineshape_scan;
use crate::{Error, Result};

/// Flat budget summary. Field names carry their units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    /// Set only inside a sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis_value: Option<f64>,
    pub scenario: String,
    pub omega_z_rad_s: f64,
    pub omega_res_rad_s: f64,
    pub resonator_offset_rad_s: f64,
    pub resonator_width_rad_s: f64,
    pub quality_factor: f64,
    pub z_re_ohm: f64,
    pub z_im_ohm: f64,
    pub coupling_capacitance_f: f64,
    pub l_logic_h: f64,
    pub l_spectroscopy_h: f64,
    pub omega_ex_rad_s: f64,
    pub t_ex_s: f64,
    pub gamma_logic_per_s: f64,
    pub gamma_spectroscopy_per_s: f64,
    pub gamma_per_s: f64,
    pub n_bar: f64,
    pub figure: f64,
    pub threshold: f64,
    pub feasible: bool,
}

impl BudgetReport {
    pub fn new(scenario: &str, b: &ExchangeBudget) -> Self {
        let res = &b.resonator;
        Self {
            axis_value: None,
            scenario: scenario.to_string(),
            omega_z_rad_s: b.omega_z,
            omega_res_rad_s: res.center_frequency(),
            resonator_offset_rad_s: b.omega_z - res.center_frequency(),
            resonator_width_rad_s: res.width(),
            quality_factor: res.quality_factor(),
            z_re_ohm: b.z_at_omega_z.re,
            z_im_ohm: b.z_at_omega_z.im,
            coupling_capacitance_f: b.coupling_capacitance,
            l_logic_h: b.logic.inductance,
            l_spectroscopy_h: b.spectroscopy.inductance,
            omega_ex_rad_s: b.omega_ex,
            t_ex_s: b.t_ex,
            gamma_logic_per_s: b.gamma_logic,
            gamma_spectroscopy_per_s: b.gamma_spectroscopy,
            gamma_per_s: b.gamma,
            n_bar: b.n_bar,
            figure: b.figure,
            threshold: b.threshold,
            feasible: b.feasible,
        }
    }

    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        Ok(Self::new(&cfg.scenario, &qls_budget(&cfg.budget_input()?)?))
    }

    /// Present when the figure misses the threshold.
    pub fn warning(&self) -> Option<String> {
        (!self.feasible).then(|| {
            format!(
                "infeasible: t_ex * n_bar * gamma = {:.4} >= {} (n_bar = {:.1})",
                self.figure, self.threshold, self.n_bar
            )
        })
    }

    /// Aligned `key value` lines for a terminal.
    pub fn to_text(&self) -> String {
        let rows: [(&str, String); 14] = [
            ("scenario", self.scenario.clone()),
            ("omega_z / 2pi [Hz]", fmt_hz(self.omega_z_rad_s)),
            ("omega_res / 2pi [Hz]", fmt_hz(self.omega_res_rad_s)),
            ("offset [linewidths]", format!("{:.3}", self.resonator_offset_rad_s / self.resonator_width_rad_s)),
            ("Q", format!("{:.1}", self.quality_factor)),
            ("Z(omega_z) [ohm]", format!("{:.6e} {:+.6e}i", self.z_re_ohm, self.z_im_ohm)),
            ("l_L [H]", format!("{:.6e}", self.l_logic_h)),
            ("l_S [H]", format!("{:.6e}", self.l_spectroscopy_h)),
            ("omega_ex [rad/s]", format!("{:.6}", self.omega_ex_rad_s)),
            ("t_ex [s]", format!("{:.6}", self.t_ex_s)),
            ("gamma [1/s]", format!("{:.6}", self.gamma_per_s)),
            ("n_bar", format!("{:.4}", self.n_bar)),
            ("t_ex*n_bar*gamma", format!("{:.5}", self.figure)),
            ("feasible", format!("{} (threshold {})", self.feasible, self.threshold)),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<22}{v}\n"));
        }
        out
    }
}

fn fmt_hz(omega: f64) -> String {
    format!("{:.6}", crate::constants::angular_to_hz(omega))
}

/// Writes serializable rows as CSV (header from field names) or JSON lines.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Records => {
            for r in rows {
                serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.to_string()))?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRow {
    pub z_m: f64,
    pub b_t: f64,
    pub b1_t_per_m: f64,
    pub b2_t_per_m2: f64,
    /// `logic`, `spectroscopy`, or empty.
    pub marker: &'static str,
    /// Analytic gradients agree with the finite-difference oracle to 1e-6.
    pub fd_agrees: Option<bool>,
}

/// Field profile over the configured grid with trap-site markers and the
/// oracle flag on every row.
pub fn field_rows(cfg: &RunConfig) -> Result<Vec<FieldRow>> {
    let assembly: MagnetAssembly = cfg.magnet_assembly()?;
    let m = cfg.magnet.as_ref().expect("magnet_assembly checked the block");
    let z = cfg.field_grid()?;
    let profile = assembly.profile(&z);
    Ok((0..profile.len())
        .map(|i| {
            let zi = profile.z[i];
            let marker = if zi == m.logic_z_m {
                "logic"
            } else if zi == m.spectroscopy_z_m {
                "spectroscopy"
            } else {
                ""
            };
            FieldRow {
                z_m: zi,
                b_t: profile.b[i],
                b1_t_per_m: profile.b1[i],
                b2_t_per_m2: profile.b2[i],
                marker,
                fd_agrees: cfg.field_check(&assembly, zi),
            }
        })
        .collect())
}

/// Which report a sweep re-evaluates at each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    Budget,
    /// Lineshape summary: jump rate, fitted center and width.
    Lineshape,
}

/// `start:stop:points[:log]`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl SweepRange {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::config("range", format!("{m} (expected start:stop:points[:log], got `{s}`)"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(bad("wrong number of fields"));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad("bad stop"))?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad("bad point count"))?;
        let log = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") => false,
            Some("log") => true,
            Some(_) => return Err(bad("spacing must be `lin` or `log`")),
        };
        if points < 1 || !start.is_finite() || !stop.is_finite() {
            return Err(bad("need finite bounds and at least one point"));
        }
        if log && (start <= 0.0 || stop <= 0.0) {
            return Err(bad("log spacing needs positive bounds"));
        }
        Ok(Self { start, stop, points, log })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / n;
                if self.log {
                    (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.stop - self.start)
                }
            })
            .collect()
    }
}

/// Returns a copy of `cfg` with the numeric leaf at dotted `axis` set to
/// `value`. Integer leaves accept only integral values.
pub fn with_axis(cfg: &RunConfig, axis: &str, value: f64) -> Result<RunConfig> {
    let mut root = toml::Value::try_from(cfg).map_err(|e| Error::config(axis, e.to_string()))?;
    let mut node = &mut root;
    for key in axis.split('.') {
        node = node
            .get_mut(key)
            .ok_or_else(|| Error::config(axis, format!("no such key `{key}` in this config")))?;
    }
    match node {
        toml::Value::Float(f) => *f = value,
        toml::Value::Integer(i) => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(Error::config(axis, format!("integer parameter cannot take {value}")));
            }
            *i = value as i64;
        }
        other => {
            return Err(Error::config(
                axis,
                format!("axis must name a numeric leaf, found {}", other.type_str()),
            ))
        }
    }
    let text = toml::to_string(&root).map_err(|e| Error::config(axis, e.to_string()))?;
    RunConfig::from_toml_str(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineshapeSweepRow {
    pub axis_value: f64,
    pub jump_rate: f64,
    pub fitted_center_rad_s: f64,
    pub fitted_width_rad_s: f64,
}

pub enum SweepRows {
    Budget(Vec<BudgetReport>),
    Lineshape(Vec<LineshapeSweepRow>),
}

impl SweepRows {
    pub fn write<W: Write>(&self, format: OutputFormat, out: W) -> Result<()> {
        match self {
            SweepRows::Budget(r) => write_rows(r, format, out),
            SweepRows::Lineshape(r) => write_rows(r, format, out),
        }
    }
}

pub fn sweep(cfg: &RunConfig, axis: &str, range: &SweepRange, target: SweepTarget) -> Result<SweepRows> {
    let values = range.values();
    // fail on a bad axis before doing any work
    with_axis(cfg, axis, values[0])?;
    match target {
        SweepTarget::Budget => values
            .iter()
            .map(|&v| {
                let c = with_axis(cfg, axis, v)?;
                Ok(BudgetReport {
                    axis_value: Some(v),
                    ..BudgetReport::from_config(&c)?
                })
            })
            .collect::<Result<_>>()
            .map(SweepRows::Budget),
        SweepTarget::Lineshape => values
            .iter()
            .map(|&v| {
                let c = with_axis(cfg, axis, v)?;
                let fit = lineshape_scan(&c.protocol_config()?).fit();
                Ok(LineshapeSweepRow {
                    axis_value: v,
                    jump_rate: fit.jump_rate,
                    fitted_center_rad_s: fit.center,
                    fitted_width_rad_s: fit.width,
                })
            })
            .collect::<Result<_>>()
            .map(SweepRows::Lineshape),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn electron() -> RunConfig {
        RunConfig::bundled("paper-electron").unwrap()
    }

    #[test]
    fn range_parsing() {
        let r = SweepRange::parse("5:100:20").unwrap();
        assert_eq!(r.values().len(), 20);
        assert_eq!(r.values()[0], 5.0);
        assert!((r.values()[19] - 100.0).abs() < 1e-12);
        let l = SweepRange::parse("1e-3:1:4:log").unwrap().values();
        assert!((l[1] / l[0] - 10.0).abs() < 1e-9);
        assert!(SweepRange::parse("1:2").is_err());
        assert!(SweepRange::parse("0:1:3:log").is_err());
    }

    #[test]
    fn non_numeric_axis_is_schema_error() {
        let r = SweepRange::parse("1:2:2").unwrap();
        for axis in ["scenario", "particle.species", "trap", "trap.nope"] {
            match sweep(&electron(), axis, &r, SweepTarget::Budget) {
                Err(Error::Config { path, .. }) => assert_eq!(path, axis),
                Err(e) => panic!("{axis}: {e}"),
                Ok(_) => panic!("{axis}: accepted"),
            }
        }
    }

    #[test]
    fn detuning_sweep_monotone() {
        let r = SweepRange::parse("5:100:20").unwrap();
        let SweepRows::Budget(rows) = sweep(&electron(), "resonator.detune_linewidths", &r, SweepTarget::Budget).unwrap() else {
            unreachable!()
        };
        assert!(rows.windows(2).all(|w| w[1].figure < w[0].figure));
    }

    #[test]
    fn temperature_sweep_matches_bose() {
        let r = SweepRange::parse("0.005:4.0:12:log").unwrap();
        let SweepRows::Budget(rows) = sweep(&electron(), "trap.temperature_k", &r, SweepTarget::Budget).unwrap() else {
            unreachable!()
        };
        let k = crate::constants::CODATA_2018;
        for row in rows {
            let x = k.hbar * row.omega_z_rad_s / (k.k_b * row.axis_value.unwrap());
            let bose = 1.0 / x.exp_m1();
            assert!((row.n_bar / bose - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_axis_rejects_fractions() {
        assert!(with_axis(&electron(), "protocol.cycles", 10.5).is_err());
        assert_eq!(with_axis(&electron(), "protocol.cycles", 10.0).unwrap().protocol.unwrap().cycles, 10);
    }

    #[test]
    fn budget_sweep_csv_has_axis_column() {
        let r = SweepRange::parse("10:20:2").unwrap();
        let rows = sweep(&electron(), "resonator.detune_linewidths", &r, SweepTarget::Budget).unwrap();
        let mut out = Vec::new();
        rows.write(OutputFormat::Csv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("axis_value,scenario,"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn budget_report_records_and_csv() {
        let rep = BudgetReport::from_config(&electron()).unwrap();
        let mut csv = Vec::new();
        write_rows(std::slice::from_ref(&rep), OutputFormat::Csv, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("scenario,omega_z_rad_s,"));
        let mut js = Vec::new();
        write_rows(&[rep], OutputFormat::Records, &mut js).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&js).unwrap();
        assert!((v["t_ex_s"].as_f64().unwrap() - 0.160).abs() < 0.001);
    }

    #[test]
    fn field_rows_flag_and_mark() {
        let rows = field_rows(&electron()).unwrap();
        let logic = rows.iter().find(|r| r.marker == "logic").unwrap();
        assert!((logic.b2_t_per_m2 - 9000.0).abs() < 1e-6);
        assert!(logic.b1_t_per_m.abs() < 1e-9);
        let spec = rows.iter().find(|r| r.marker == "spectroscopy").unwrap();
        assert!(spec.b2_t_per_m2 > 2.0 && spec.b2_t_per_m2 < 8.0);
        assert!(rows.iter().all(|r| r.fd_agrees == Some(true)), "{:?}",
            rows.iter().filter(|r| r.fd_agrees != Some(true)).map(|r| r.z_m).collect::<Vec<_>>());
    }
}
