//! `qls`: budgets, field profiles, lineshapes, protocol streams and sweeps
//! from a TOML run configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qls_core::config::{OutputFormat, RunConfig};
use qls_core::protocol::{center_projection, lineshape_scan, record_stream, write_records_csv, Lineshape};
use qls_core::report::{field_rows, sweep, write_rows, BudgetReport, SweepRange, SweepTarget};
use qls_core::Error;

#[derive(Parser)]
#[command(name = "qls", version, about = "Two-trap quantum logic spectroscopy budgets and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, global = true, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Bundled scenario: paper-electron or paper-proton.
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Write `<command>.<csv|jsonl>` here instead of stdout. Without a value,
    /// uses the config's `output_dir`.
    #[arg(long, global = true, num_args = 0..=1)]
    out: Option<Option<PathBuf>>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Records,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Records => OutputFormat::Records,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Budget,
    Lineshape,
}

#[derive(Subcommand)]
enum Command {
    /// Exchange-time and dissipation budget. Human-readable unless --format
    /// or --out is given.
    Budget,
    /// On-axis field, B1 and B2 of the magnet block.
    Field,
    /// Quantum-jump lineshape over the drive grid.
    Lineshape {
        /// Also report the Monte Carlo line-center scatter for one day of
        /// cycles (8 replicas).
        #[arg(long)]
        project_day: bool,
    },
    /// Per-cycle record stream of the protocol.
    Protocol,
    /// Re-evaluates a report over a numeric config leaf.
    Sweep {
        /// Dotted key path, e.g. resonator.detune_linewidths.
        #[arg(long)]
        axis: String,
        /// start:stop:points[:log]
        #[arg(long)]
        range: String,
        #[arg(long, value_enum, default_value = "budget")]
        report: Target,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Budget => "budget",
            Command::Field => "field",
            Command::Lineshape { .. } => "lineshape",
            Command::Protocol => "protocol",
            Command::Sweep { .. } => "sweep",
        }
    }
}

fn error_json(kind: &str, path: Option<&str>, message: &str) -> String {
    let mut e = json!({ "kind": kind, "message": message });
    if let Some(p) = path {
        e["path"] = json!(p);
    }
    json!({ "error": e }).to_string()
}

fn report_error(e: &Error) -> ExitCode {
    let line = match e {
        Error::Config { path, message } => error_json("config", Some(path), message),
        Error::Domain { .. } => error_json("domain", None, &e.to_string()),
        Error::Truncation { .. } => error_json("truncation", None, &e.to_string()),
        Error::StepUnderflow { .. } => error_json("oracle", None, &e.to_string()),
        Error::Io(m) => error_json("io", None, m),
    };
    eprintln!("{line}");
    ExitCode::from(match e {
        Error::Config { .. } => 2,
        _ => 1,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                // --help / --version
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", error_json("usage", None, e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match (&common.config, &common.scenario) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::bundled(name)?,
        (None, None) => {
            return Err(Error::config(
                "config",
                "give --config <path> or --scenario <name>",
            ))
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(f) = common.format {
        cfg.format = f.into();
    }
    Ok(cfg)
}

/// Destination for a command's table: a file under the output directory or
/// stdout.
fn sink(common: &Common, cfg: &RunConfig, name: &str) -> Result<(Box<dyn Write>, Option<PathBuf>), Error> {
    let dir = match &common.out {
        None => return Ok((Box::new(BufWriter::new(io::stdout().lock())), None)),
        Some(Some(d)) => d.clone(),
        Some(None) => PathBuf::from(&cfg.output_dir),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let ext = match cfg.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Records => "jsonl",
    };
    let path = dir.join(format!("{name}.{ext}"));
    let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok((Box::new(BufWriter::new(file)), Some(path)))
}

fn finish(mut w: Box<dyn Write>, path: Option<&Path>) -> Result<(), Error> {
    w.flush()?;
    if let Some(p) = path {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn write_summary<T: serde::Serialize>(w: &mut dyn Write, format: OutputFormat, key: &str, value: &T) -> Result<(), Error> {
    let v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    match format {
        OutputFormat::Csv => {
            if let Some(obj) = v.as_object() {
                for (k, x) in obj {
                    writeln!(w, "# {key}.{k}={x}")?;
                }
            }
        }
        OutputFormat::Records => writeln!(w, "{}", json!({ key: v }))?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let common = &cli.common;
    let cfg = load(common)?;
    let name = cli.command.name();
    match &cli.command {
        Command::Budget => {
            let report = BudgetReport::from_config(&cfg)?;
            if let Some(w) = report.warning() {
                eprintln!("warning: {w}");
            }
            if common.format.is_none() && common.out.is_none() {
                print!("{}", report.to_text());
                return Ok(());
            }
            let (mut w, path) = sink(common, &cfg, name)?;
            write_rows(std::slice::from_ref(&report), cfg.format, &mut w)?;
            finish(w, path.as_deref())
        }
        Command::Field => {
            let rows = field_rows(&cfg)?;
            let (mut w, path) = sink(common, &cfg, name)?;
            write_rows(&rows, cfg.format, &mut w)?;
            finish(w, path.as_deref())
        }
        Command::Lineshape { project_day } => {
            let pc = cfg.protocol_config()?;
            let ls = lineshape_scan(&pc);
            let fit = ls.fit();
            let (mut w, path) = sink(common, &cfg, name)?;
            match cfg.format {
                OutputFormat::Csv => ls.write_csv(&mut w, Some(&fit))?,
                OutputFormat::Records => {
                    write_rows(&ls.rows(), cfg.format, &mut w)?;
                    write_summary(&mut w, cfg.format, "summary", &fit)?;
                }
            }
            if *project_day {
                let proj = center_projection(&pc, 86_400.0, 8)?;
                write_summary(&mut w, cfg.format, "day_projection", &proj)?;
            }
            finish(w, path.as_deref())
        }
        Command::Protocol => {
            let pc = cfg.protocol_config()?;
            let records = record_stream(&pc);
            let fit = Lineshape::from_records(&pc, &records).fit();
            let timing = pc.timing_budget();
            let (mut w, path) = sink(common, &cfg, name)?;
            match cfg.format {
                OutputFormat::Csv => write_records_csv(&records, &mut w)?,
                OutputFormat::Records => write_rows(&records, cfg.format, &mut w)?,
            }
            write_summary(&mut w, cfg.format, "summary", &fit)?;
            write_summary(&mut w, cfg.format, "timing", &timing)?;
            finish(w, path.as_deref())
        }
        Command::Sweep { axis, range, report } => {
            let range = SweepRange::parse(range)?;
            let target = match report {
                Target::Budget => SweepTarget::Budget,
                Target::Lineshape => SweepTarget::Lineshape,
            };
            let rows = sweep(&cfg, axis, &range, target)?;
            let (mut w, path) = sink(common, &cfg, name)?;
            rows.write(cfg.format, &mut w)?;
            finish(w, path.as_deref())
        }
    }
}
