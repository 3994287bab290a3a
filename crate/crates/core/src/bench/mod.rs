//! Experiment harness. Each experiment turns a [`Config`] into a
//! [`BenchOutput`]; [`write_output`] stores it under
//! `<root>/<experiment>/<hash>/{report.csv, summary.json, plots/*.svg}`.
//!
//! Trials run in parallel, each seeded by `trial_seed(config.seed, i)` and
//! collected in trial order, so reruns of the same config write identical
//! files (timings excepted).

mod noise;
mod osr;
mod rolloff;
mod skew;
mod table31;
mod timing;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use noise::{closed_form_mse, run_noise_sweep, ClosedFormPoint};
pub use osr::run_osr_surface;
pub use rolloff::run_rolloff;
pub use skew::run_skew;
pub use table31::{calibration_necessity, run_table31, Necessity};
pub use timing::{op_count_table, run_timing, OpCountRow};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::metrics::MetricsReport;
use crate::plot::LinePlot;
use crate::rng::trial_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Table31,
    NoiseSweep,
    OsrSurface,
    Timing,
    Rolloff,
    Skew,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Table31,
        Experiment::NoiseSweep,
        Experiment::OsrSurface,
        Experiment::Timing,
        Experiment::Rolloff,
        Experiment::Skew,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Table31 => "table31",
            Experiment::NoiseSweep => "noise-sweep",
            Experiment::OsrSurface => "osr-surface",
            Experiment::Timing => "timing",
            Experiment::Rolloff => "rolloff",
            Experiment::Skew => "skew",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name).ok_or_else(|| {
            let valid: Vec<&str> = Self::ALL.iter().map(|e| e.name()).collect();
            Error::Parse(format!("unknown experiment '{name}' (valid: {})", valid.join(", ")))
        })
    }
}

/// A pass/fail record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: String,
    pub cell: String,
    pub statistic: String,
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub experiment: Experiment,
    pub rows: Vec<Row>,
    pub assertions: Vec<Assertion>,
    /// Derived quantities echoed into `summary.json`.
    pub derived: serde_json::Map<String, serde_json::Value>,
    pub plots: Vec<(String, LinePlot)>,
    /// False when the outputs depend on the machine (wall times).
    pub reproducible: bool,
}

impl BenchOutput {
    pub fn new(experiment: Experiment) -> Self {
        BenchOutput {
            experiment,
            rows: Vec::new(),
            assertions: Vec::new(),
            derived: serde_json::Map::new(),
            plots: Vec::new(),
            reproducible: true,
        }
    }

    pub fn row(&mut self, method: &str, cell: &str, statistic: &str, value: f64, unit: &str) {
        self.rows.push(Row {
            method: method.into(),
            cell: cell.into(),
            statistic: statistic.into(),
            value,
            unit: unit.into(),
        });
    }

    /// Mean, standard deviation, trial count and failure count of a cell.
    pub fn report(&mut self, r: &MetricsReport) {
        self.row(&r.method, &r.cell, "mean", r.stats.mean, &r.unit);
        self.row(&r.method, &r.cell, "std", r.stats.std, &r.unit);
        self.row(&r.method, &r.cell, "count", r.stats.count as f64, "");
        self.row(&r.method, &r.cell, "failures", r.failures as f64, "");
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> bool {
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
        passed
    }

    pub fn derive(&mut self, key: &str, value: impl Serialize) {
        self.derived.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Distinct `(method, cell)` pairs.
    pub fn cells(&self) -> BTreeSet<(String, String)> {
        self.rows.iter().map(|r| (r.method.clone(), r.cell.clone())).collect()
    }

    pub fn value(&self, method: &str, cell: &str, statistic: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.cell == cell && r.statistic == statistic)
            .map(|r| r.value)
    }
}

pub fn run(experiment: Experiment, cfg: &Config) -> Result<BenchOutput> {
    cfg.validate()?;
    match experiment {
        Experiment::Table31 => run_table31(cfg),
        Experiment::NoiseSweep => run_noise_sweep(cfg),
        Experiment::OsrSurface => run_osr_surface(cfg),
        Experiment::Timing => run_timing(cfg),
        Experiment::Rolloff => run_rolloff(cfg),
        Experiment::Skew => run_skew(cfg),
    }
}

/// First 16 hex digits of the SHA-256 of the experiment name and the
/// resolved config.
pub fn config_hash(experiment: Experiment, cfg: &Config) -> String {
    let mut h = Sha256::new();
    h.update(experiment.name().as_bytes());
    h.update(b"\n");
    h.update(cfg.to_toml().as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub const REPORT_HEADER: [&str; 6] = ["experiment", "method", "cell", "statistic", "value", "unit"];

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Writes the run directory and returns its path.
pub fn write_output(root: &Path, cfg: &Config, out: &BenchOutput) -> Result<PathBuf> {
    let hash = config_hash(out.experiment, cfg);
    let dir = root.join(out.experiment.name()).join(&hash);
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots).map_err(|e| io_err(&plots, e))?;

    let report = dir.join("report.csv");
    let mut w = csv::Writer::from_path(&report)?;
    w.write_record(REPORT_HEADER)?;
    for r in &out.rows {
        w.write_record([out.experiment.name(), &r.method, &r.cell, &r.statistic, &fmt_f64(r.value), &r.unit])?;
    }
    w.flush()?;

    let summary = serde_json::json!({
        "experiment": out.experiment.name(),
        "hash": hash,
        "passed": out.passed(),
        "reproducible": out.reproducible,
        "config": cfg,
        "derived": out.derived,
        "assertions": out.assertions,
    });
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| io_err(&path, e))?;
    std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;

    for (name, plot) in &out.plots {
        let p = plots.join(format!("{name}.svg"));
        std::fs::write(&p, plot.to_svg()).map_err(|e| io_err(&p, e))?;
    }
    Ok(dir)
}

/// The parts of a stored `summary.json` needed to re-check a run.
#[derive(Debug, Clone, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub hash: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
}

pub fn load_summary(run_dir: &Path) -> Result<Summary> {
    let path = run_dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Runs `f(trial_seed(base, i))` for `i < n` in parallel, in trial order.
pub(crate) fn trials<T, F>(n: usize, base: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..n as u64).into_par_iter().map(|i| f(trial_seed(base, i))).collect()
}

/// Successful values and the number of failed trials.
pub(crate) fn split_results(results: Vec<Result<f64>>) -> (Vec<f64>, usize) {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(v) if v.is_finite() => ok.push(v),
            Ok(_) => failed += 1,
            Err(e) => {
                log::debug!("trial failed: {e}");
                failed += 1;
            }
        }
    }
    (ok, failed)
}

pub(crate) fn um(z: f64) -> String {
    format!("{:.0}um", z * 1e6)
}

/// Strength of the first configured sample reflector.
pub(crate) fn sample_reflectivity(cfg: &Config) -> f64 {
    cfg.sample.reflectors.first().map_or(1e-2, |r| r.r)
}

pub(crate) fn require_nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Invalid(format!("{what} grid is empty")));
    }
    Ok(())
}
