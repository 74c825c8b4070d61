//! Command-line front end: configuration, runs, sweeps, figure scans and reports.

pub mod config;
pub mod figures;
pub mod run;
pub mod selftest;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::lindblad::DissipatorMode;
use crate::observables::BatteryHamiltonianMode;
use config::{ConfigError, RunConfig};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Sim(Error::PhysicsAbort { .. }) => EXIT_PHYSICS,
            CliError::Sim(
                Error::SolverFailure { .. } | Error::DegenerateSteadyState { .. } | Error::CapExceeded { .. },
            ) => EXIT_SOLVER,
            CliError::Sim(_) => EXIT_CONFIG,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "catbattery", version, about = "Open quantum battery with a catalyst qubit")]
pub struct Cli {
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_parser = parse_dissipator)]
    pub dissipator: Option<DissipatorMode>,
    /// Battery Hamiltonian used for ergotropy: `local` or `local+J`.
    #[arg(long = "battery-h", global = true, value_parser = parse_battery_h)]
    pub battery_h: Option<BatteryHamiltonianMode>,
    /// `key=value`; dotted keys address nested fields, bare keys a top-level field or model parameter.
    #[arg(long = "override", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_dissipator(s: &str) -> Result<DissipatorMode, String> {
    s.parse()
}

fn parse_battery_h(s: &str) -> Result<BatteryHamiltonianMode, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propagate one configuration and write its time series.
    Simulate,
    /// Run the configured sweep axis in parallel.
    Sweep {
        /// Also solve for the exact steady state of every point.
        #[arg(long)]
        exact: bool,
    },
    /// Liouvillian spectra at lambda = 0, -g/sqrt(N) and 1.5.
    Spectrum,
    /// Exact null-space steady state and its observables.
    SteadyState,
    /// Paired catalyst-free / catalyst-assisted scan of one figure.
    ReproduceFig {
        #[arg(value_parser = clap::value_parser!(u8).range(2..=5))]
        figure: u8,
        /// Spin relaxation rates to run; comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.01, 0.05])]
        gamma: Vec<f64>,
    },
    /// Run the built-in oracle checks.
    Selftest,
    /// Print gnuplot column indices of the time-series files.
    Columns,
}

impl Cli {
    /// Loads the configuration and applies command-line adjustments.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(d) = self.dissipator {
            cfg.dissipator = d;
        }
        if let Some(b) = self.battery_h {
            cfg.battery_hamiltonian = b;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        Ok(cfg)
    }

    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// gnuplot-compatible `name: index` lines (1-based).
pub fn column_map() -> String {
    let mut s = String::new();
    for (i, c) in run::CSV_COLUMNS.iter().enumerate() {
        s.push_str(&format!("{c}: {}\n", i + 1));
    }
    s.push_str("# plot 'run.csv' every ::1 using 1:2 with lines  (datafile separator ',')\n");
    s
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Command::Columns = cli.command {
        print!("{}", column_map());
        return Ok(());
    }
    let cfg = cli.resolve()?;
    let dir = cfg.output.dir.clone();
    match &cli.command {
        Command::Simulate => {
            let path = dir.join(format!("{}.csv", cfg.output.prefix));
            let summary = run::simulate_params(&cfg, &cfg.params, Some(&path))?;
            write_json(&dir.join(format!("{}.summary.json", cfg.output.prefix)), &summary)?;
            println!("wrote {}", path.display());
        }
        Command::Sweep { exact } => {
            let axis = cfg
                .sweep
                .clone()
                .ok_or_else(|| ConfigError::Invalid("sweep needs a `sweep` axis in the config".into()))?;
            let report = run::run_sweep(&cfg, &axis, &dir, cli.jobs(), *exact)?;
            write_json(&dir.join("summary.json"), &report)?;
            let failed = report.rows.iter().filter(|r| r.status != "ok").count();
            println!("{} points, {failed} failed; summary in {}", report.rows.len(), dir.join("summary.json").display());
        }
        Command::Spectrum => {
            let report = figures::spectrum_report(&cfg);
            write_json(&dir.join("spectrum.json"), &report)?;
            for e in &report.entries {
                match (&e.error, e.slowest_re) {
                    (Some(err), _) => println!("{}: error: {err}", e.label),
                    (None, Some(re)) => println!("{}: gap {:.6e}, slowest Re {re:.6e}", e.label, e.gap.unwrap_or(0.0)),
                    (None, None) => println!("{}: no modes", e.label),
                }
            }
        }
        Command::SteadyState => {
            let report = figures::steady_report(&cfg)?;
            write_json(&dir.join("steady_state.json"), &report)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::ReproduceFig { figure, gamma } => {
            let base = match &cli.config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            let mut base = base;
            if let Some(d) = cli.dissipator {
                base.dissipator = d;
            }
            if let Some(b) = cli.battery_h {
                base.battery_hamiltonian = b;
            }
            let mut reports = Vec::new();
            for &g in gamma {
                let sub = dir.join(format!("fig{figure}")).join(format!("gamma={g}"));
                let rep = figures::reproduce_figure(*figure, &base, &cli.overrides, g, &sub, cli.jobs())?;
                for v in &rep.verdicts {
                    let mark = match v.holds {
                        Some(true) => "holds",
                        Some(false) => "fails",
                        None => "undecided",
                    };
                    println!("gamma={g}: {} -> {mark} ({})", v.check, v.detail);
                }
                reports.push(rep);
            }
            write_json(&dir.join(format!("fig{figure}")).join("comparison.json"), &reports)?;
        }
        Command::Selftest => {
            let checks = selftest::run(cfg.seed);
            let mut out = std::io::stdout().lock();
            for c in &checks {
                let _ = writeln!(out, "{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(CliError::Sim(Error::SolverFailure {
                    reason: "selftest failed".into(),
                    residuals: vec![],
                }));
            }
        }
        Command::Columns => unreachable!(),
    }
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to a process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
