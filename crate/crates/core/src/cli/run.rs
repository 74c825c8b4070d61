//! Simulation runs, CSV records and sweep summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{RunConfig, SweepAxis};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::evolve::{propagate_with, steady_state_of};
use crate::lindblad::build_generator;
use crate::model::ModelParams;
use crate::observables::{BatteryHamiltonianMode, ObservableRow, ObservableSet};

/// Column order of every time-series file.
pub const CSV_COLUMNS: [&str; 11] = [
    "t",
    "W_raw",
    "W_per_spin",
    "W_per_capacity",
    "E_batt",
    "E_cat",
    "E_cav",
    "trace_err",
    "min_eig",
    "purity",
    "dark_overlap",
];

/// Aggregates of one trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    /// Mean ergotropy over `[0.8 t_end, t_end]` with the configured battery Hamiltonian.
    pub w_ss_mean: f64,
    /// Same window, local battery Hamiltonian.
    pub w_ss_mean_local: f64,
    /// Same window, local plus exchange battery Hamiltonian.
    pub w_ss_mean_local_plus_j: f64,
    /// `max - min` of the catalyst energy over the run.
    pub catalyst_energy_drift: f64,
    /// Mean quasi-dark population over the window.
    pub dark_overlap_mean: f64,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub snapshots: usize,
    pub final_time: f64,
}

#[derive(Debug, Default)]
struct Accumulator {
    t_end: f64,
    window: Vec<(f64, f64, f64)>,
    dark: Vec<f64>,
    cat_min: f64,
    cat_max: f64,
    max_trace: f64,
    max_herm: f64,
    min_eig: f64,
    snapshots: usize,
    final_time: f64,
}

impl Accumulator {
    fn new(t_end: f64) -> Self {
        Self {
            t_end,
            cat_min: f64::INFINITY,
            cat_max: f64::NEG_INFINITY,
            min_eig: f64::INFINITY,
            ..Default::default()
        }
    }

    fn finish(self) -> RunSummary {
        let n = self.window.len().max(1) as f64;
        let mean = |f: fn(&(f64, f64, f64)) -> f64| self.window.iter().map(f).sum::<f64>() / n;
        RunSummary {
            w_ss_mean: mean(|w| w.0),
            w_ss_mean_local: mean(|w| w.1),
            w_ss_mean_local_plus_j: mean(|w| w.2),
            catalyst_energy_drift: self.cat_max - self.cat_min,
            dark_overlap_mean: self.dark.iter().sum::<f64>() / self.dark.len().max(1) as f64,
            max_trace_error: self.max_trace,
            max_hermiticity_error: self.max_herm,
            min_eigenvalue: self.min_eig,
            snapshots: self.snapshots,
            final_time: self.final_time,
        }
    }
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.15e}")
    }
}

/// Runs one trajectory, streaming rows to `out` (if given) and returning aggregates.
/// On a physics abort the rows so far are flushed and a `NaN` sentinel row marks
/// the failure time.
pub fn simulate_params(
    cfg: &RunConfig,
    p: &ModelParams,
    out: Option<&Path>,
) -> Result<RunSummary> {
    let gen = build_generator(p, cfg.dissipator)?;
    let rho0 = cfg.initial_state.build(p)?;
    let obs = ObservableSet::new(p, cfg.battery_hamiltonian)?;
    let other_mode = match cfg.battery_hamiltonian {
        BatteryHamiltonianMode::LocalOnly => BatteryHamiltonianMode::LocalPlusExchange,
        BatteryHamiltonianMode::LocalPlusExchange => BatteryHamiltonianMode::LocalOnly,
    };
    let other = ObservableSet::new(p, other_mode)?;
    let mut writer = match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(io_error)?;
            }
            let mut w = BufWriter::new(File::create(path).map_err(io_error)?);
            writeln!(w, "# catbattery {}", cfg.provenance()).map_err(io_error)?;
            writeln!(w, "{}", CSV_COLUMNS.join(",")).map_err(io_error)?;
            Some(w)
        }
        None => None,
    };
    let mut acc = Accumulator::new(cfg.t_end);
    let result = propagate_with(&gen, &rho0, &cfg.integrator, cfg.t_end, |t, rho, diag| {
        let rho = DensityMatrix::from_operator_unchecked(rho.clone());
        let row = obs.evaluate(&rho)?;
        let w_other = other.evaluate(&rho)?.ergotropy;
        record(&mut acc, t, &row, w_other, cfg.battery_hamiltonian);
        acc.max_trace = acc.max_trace.max(diag.trace_error);
        acc.max_herm = acc.max_herm.max(diag.hermiticity_error);
        acc.min_eig = acc.min_eig.min(diag.min_eigenvalue);
        if let Some(w) = writer.as_mut() {
            let fields = [
                t,
                row.ergotropy,
                row.ergotropy_per_spin,
                row.ergotropy_per_capacity,
                row.battery_energy,
                row.catalyst_energy,
                row.cavity_energy,
                diag.trace_error,
                diag.min_eigenvalue,
                row.purity,
                row.dark_overlap,
            ];
            let line: Vec<String> = fields.iter().map(|x| fmt(*x)).collect();
            writeln!(w, "{}", line.join(",")).map_err(io_error)?;
        }
        Ok(())
    });
    if let Some(mut w) = writer {
        if let Err(Error::PhysicsAbort { time, .. }) = &result {
            let mut line = vec![fmt(*time)];
            line.extend(std::iter::repeat("NaN".to_string()).take(CSV_COLUMNS.len() - 1));
            writeln!(w, "{}", line.join(",")).map_err(io_error)?;
        }
        w.flush().map_err(io_error)?;
    }
    result?;
    Ok(acc.finish())
}

fn record(acc: &mut Accumulator, t: f64, row: &ObservableRow, w_other: f64, mode: BatteryHamiltonianMode) {
    acc.snapshots += 1;
    acc.final_time = t;
    acc.cat_min = acc.cat_min.min(row.catalyst_energy);
    acc.cat_max = acc.cat_max.max(row.catalyst_energy);
    if t >= 0.8 * acc.t_end - 1e-9 {
        let (local, full) = match mode {
            BatteryHamiltonianMode::LocalOnly => (row.ergotropy, w_other),
            BatteryHamiltonianMode::LocalPlusExchange => (w_other, row.ergotropy),
        };
        acc.window.push((row.ergotropy, local, full));
        acc.dark.push(row.dark_overlap);
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::InvalidState(format!("output error: {e}"))
}

/// Steady-state ergotropy of the exact null vector, when unique and computable.
#[derive(Debug, Clone, Serialize)]
pub struct ExactSteady {
    pub ergotropy: Option<f64>,
    pub note: Option<String>,
}

pub fn exact_steady(cfg: &RunConfig, p: &ModelParams) -> ExactSteady {
    let attempt = || -> Result<f64> {
        let gen = build_generator(p, cfg.dissipator)?;
        let rho = steady_state_of(&gen)?;
        Ok(ObservableSet::new(p, cfg.battery_hamiltonian)?
            .evaluate(&rho)?
            .ergotropy)
    };
    match attempt() {
        Ok(w) => ExactSteady {
            ergotropy: Some(w),
            note: None,
        },
        Err(e) => ExactSteady {
            ergotropy: None,
            note: Some(e.to_string()),
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: &'static str,
    pub file: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_steady: Option<ExactSteady>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub parameter: String,
    pub rows: Vec<SweepRow>,
}

/// File name of one sweep point.
pub fn point_file(dir: &Path, parameter: &str, value: f64) -> PathBuf {
    dir.join(format!("{parameter}={value}.csv"))
}

/// Runs every point of `axis` on a pool of `jobs` workers. Failed points are
/// marked in their row without stopping the others.
pub fn run_sweep(
    cfg: &RunConfig,
    axis: &SweepAxis,
    dir: &Path,
    jobs: usize,
    with_exact: bool,
) -> std::result::Result<SweepReport, super::config::ConfigError> {
    use rayon::prelude::*;
    let points = cfg.sweep_points(axis)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| super::config::ConfigError::Invalid(format!("worker pool: {e}")))?;
    let rows = pool.install(|| {
        axis.values
            .par_iter()
            .zip(points.par_iter())
            .map(|(&value, p)| {
                let file = point_file(dir, &axis.parameter, value);
                log::info!("{} = {value}: start", axis.parameter);
                let outcome = simulate_params(cfg, p, Some(&file));
                let exact = with_exact.then(|| exact_steady(cfg, p));
                match outcome {
                    Ok(s) => SweepRow {
                        value,
                        status: "ok",
                        file,
                        error: None,
                        summary: Some(s),
                        exact_steady: exact,
                    },
                    Err(e) => SweepRow {
                        value,
                        status: "failed",
                        file,
                        error: Some(e.to_string()),
                        summary: None,
                        exact_steady: exact,
                    },
                }
            })
            .collect()
    });
    Ok(SweepReport {
        parameter: axis.parameter.clone(),
        rows,
    })
}
