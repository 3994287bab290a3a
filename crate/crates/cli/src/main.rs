//! `sweepcal`: synthesize sweeps, calibrate them, run the bench experiments.
//!
//! Exit codes: 0 when every assertion passes, 2 when one fails, 1 on usage
//! or IO errors.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sweepcal::bench::{self, Experiment};
use sweepcal::calib::AScan;
use sweepcal::config::Config;
use sweepcal::io;
use sweepcal::metrics::fwhm;
use sweepcal::pipeline::{Method, Rig};
use sweepcal::plot::{LinePlot, Series};
use sweepcal::synth::NoiseModel;

#[derive(Parser, Debug)]
#[command(name = "sweepcal", version, about = "Swept-source OCT calibration toolkit")]
struct Cli {
    /// TOML config file; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the bench experiments.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the MZI, interferogram and true sweep of one scan as CSV.
    Synth,
    /// Calibrate one synthetic scan and reconstruct its A-scan.
    Calibrate {
        /// One of: hilbert, envelope, ekf, ukf, ipdft-by2, ipdft-rvci1,
        /// ipdft-rvci3, zero-crossing, zero-crossing-quad, realtime.
        #[arg(long)]
        method: Option<String>,
        /// Also write the A-scan of the uncalibrated interferogram.
        #[arg(long)]
        no_calib: bool,
    },
    /// Run an experiment: table31, noise-sweep, osr-surface, timing, rolloff, skew.
    Bench {
        experiment: String,
        #[command(flatten)]
        overrides: BenchOverrides,
    },
    /// Print the assertions stored in a bench run directory.
    Report { run_dir: PathBuf },
}

#[derive(Args, Debug, Default)]
struct BenchOverrides {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    osr: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    bits: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    snr: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
}

impl BenchOverrides {
    fn apply(&self, cfg: &mut Config) {
        let b = &mut cfg.bench;
        if let Some(v) = self.trials {
            b.trials = v;
        }
        if let Some(v) = &self.osr {
            b.osr = v.clone();
        }
        if let Some(v) = &self.bits {
            b.bits = v.clone();
        }
        if let Some(v) = &self.snr {
            b.snr_db = v.clone();
        }
        if let Some(v) = &self.lengths {
            b.timing_lengths = v.clone();
        }
        if let Some(v) = self.repeats {
            b.timing_repeats = v;
        }
    }
}

/// Failure kinds mapped onto exit codes.
enum Outcome {
    Passed,
    AssertionFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::AssertionFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Synth => synth(&cfg, &cli.out.join("synth")),
        Command::Calibrate { method, no_calib } => {
            let name = method.clone().unwrap_or_else(|| cfg.pipeline.method.clone());
            calibrate(&cfg, &name, *no_calib, &cli.out.join("calibrate").join(&name))
        }
        Command::Bench { experiment, overrides } => {
            let exp = Experiment::parse(experiment)?;
            overrides.apply(&mut cfg);
            cfg.validate()?;
            run_bench(exp, &cfg, &cli.out)
        }
        Command::Report { run_dir } => report(run_dir),
    }
}

fn write_summary(dir: &Path, value: serde_json::Value) -> Result<()> {
    let path = dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value)? + "\n").with_context(|| path.display().to_string())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| path.display().to_string())
}

fn synth(cfg: &Config, dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    let rig = Rig::new(cfg)?;
    let noise = NoiseModel::new(cfg.noise.sigma_w, cfg.seed)?;
    let acq = rig.acquire(&cfg.reflectivity()?, &noise)?;
    io::write_signal(&dir.join("mzi.csv"), &acq.mzi)?;
    io::write_signal(&dir.join("interferogram.csv"), &acq.interferogram)?;
    let k: Vec<f64> = acq.mzi.times.iter().map(|&t| rig.profile.eval_unchecked(t)).collect();
    let phase: Vec<f64> = k.iter().map(|k| rig.geom.dl * k).collect();
    io::write_columns(create(&dir.join("sweep.csv"))?, &["t_s", "k_rad_per_m", "mzi_phase_rad"], &[&acq.mzi.times, &k, &phase])?;
    write_summary(
        dir,
        serde_json::json!({
            "command": "synth",
            "config": cfg,
            "samples": acq.mzi.len(),
            "files": ["mzi.csv", "interferogram.csv", "sweep.csv"],
        }),
    )?;
    println!("wrote {} samples to {}", acq.mzi.len(), dir.display());
    Ok(Outcome::Passed)
}

fn peak_summary(a: &AScan, hint: Option<f64>) -> serde_json::Value {
    let peak = a.peak_from(100e-6).map(|(i, m)| (a.depth[i], m));
    let width = fwhm(a, hint.or(peak.map(|p| p.0))).ok();
    serde_json::json!({
        "peak_depth_m": peak.map(|p| p.0),
        "peak_magnitude": peak.map(|p| p.1),
        "fwhm_m": width,
    })
}

fn calibrate(cfg: &Config, name: &str, no_calib: bool, dir: &Path) -> Result<Outcome> {
    let method = Method::parse_with(name, cfg.ladder.m_c, cfg.pipeline.block_len)?;
    std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    let rig = Rig::new(cfg)?;
    let refl = cfg.reflectivity()?;
    let ladder = rig.ladder(cfg.ladder.m_c)?;
    let noise = NoiseModel::new(cfg.noise.sigma_w, cfg.seed)?;
    let acq = rig.acquire(&refl, &noise)?;
    let scan = match method {
        Method::Realtime => rig.calibrate(&method, &refl, &ladder, &noise)?,
        _ => rig.calibrate_acquired(&method, &acq, &ladder, cfg.noise.sigma_w)?,
    };
    let ascan = rig.ascan(&scan)?;
    io::write_scan(&dir.join("scan.csv"), &scan)?;
    io::write_ascan(&dir.join("ascan.csv"), &ascan)?;
    let hint = cfg.sample.reflectors.first().map(|r| r.z);
    let mm = |a: &AScan| a.depth.iter().map(|z| z * 1e3).collect::<Vec<_>>();
    let mut plot = LinePlot::new(format!("A-scan ({name})"), "depth (mm)", "magnitude")
        .with(Series::new(name, mm(&ascan), ascan.magnitude.clone()));
    let mut summary = serde_json::json!({
        "command": "calibrate",
        "method": name,
        "config": cfg,
        "scan_len": scan.len(),
        "calibrated": peak_summary(&ascan, hint),
    });
    if no_calib {
        let raw = rig.ascan(&rig.uncalibrated(&acq)?)?;
        io::write_ascan(&dir.join("ascan_uncalibrated.csv"), &raw)?;
        plot = plot.with(Series::new("uncalibrated", mm(&raw), raw.magnitude.clone()));
        summary["uncalibrated"] = peak_summary(&raw, None);
    }
    std::fs::write(dir.join("ascan.svg"), plot.to_svg()).context("writing ascan.svg")?;
    write_summary(dir, summary)?;
    println!("{}: {} samples, A-scan in {}", name, scan.len(), dir.display());
    Ok(Outcome::Passed)
}

fn print_assertions<'a>(items: impl Iterator<Item = &'a bench::Assertion>) -> bool {
    let mut ok = true;
    for a in items {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
        ok &= a.passed;
    }
    ok
}

fn run_bench(exp: Experiment, cfg: &Config, root: &Path) -> Result<Outcome> {
    let out = bench::run(exp, cfg)?;
    let dir = bench::write_output(root, cfg, &out)?;
    let ok = print_assertions(out.assertions.iter());
    println!("{}: {} rows, {} cells, results in {}", exp.name(), out.rows.len(), out.cells().len(), dir.display());
    Ok(if ok { Outcome::Passed } else { Outcome::AssertionFailed })
}

fn report(run_dir: &Path) -> Result<Outcome> {
    let s = bench::load_summary(run_dir)?;
    println!("{} run {}", s.experiment, s.hash);
    let ok = print_assertions(s.assertions.iter());
    let failed = s.assertions.iter().filter(|a| !a.passed).count();
    println!("{} assertions, {failed} failed", s.assertions.len());
    Ok(if ok && s.passed { Outcome::Passed } else { Outcome::AssertionFailed })
}
