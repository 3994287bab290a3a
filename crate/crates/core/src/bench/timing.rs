//! Wall-clock medians of the phase estimators and the arithmetic-cost table.

use std::time::{Duration, Instant};

use serde::Serialize;

use super::{require_nonempty, BenchOutput, Experiment};
use crate::config::Config;
use crate::demod::splitradix::measured_ops;
use crate::demod::{
    coarse_sweep_fit, count_ops, ekf_estimate, ekf_params_for, hilbert_phase, ipdft_estimate, ukf_estimate, ukf_params_for,
    IpdftParams, OpsMethod,
};
use crate::error::{Error, Result};
use crate::pipeline::Rig;
use crate::plot::{LinePlot, Series};
use crate::sweep_model::MziGeometry;
use crate::synth::NoiseModel;

/// Lengths at or above this are asserted on.
const ASSERT_LEN: usize = 4096;
/// Each timed measurement loops until it lasts at least this long.
const MIN_MEASUREMENT: Duration = Duration::from_millis(5);
const HILBERT_TAPS: u64 = 17;
const HILBERT_LEN: u64 = 1024;
const OP_BLOCKS: [u64; 4] = [8, 16, 32, 64];
/// Mean MZI phase advance of the timing signal (rad/sample), fixed across
/// lengths by scaling the delay.
const MEAN_OMEGA: f64 = 1.0;

const METHODS: [&str; 4] = ["ekf", "ukf", "hilbert", "ipdft"];

type Task<'a> = Box<dyn FnMut() -> Result<()> + 'a>;

/// Median seconds per call of each task. Every task is warmed up and given
/// an inner loop long enough to dwarf the timer resolution; repeats are
/// interleaved across tasks so drifting machine load hits all of them.
fn median_times(repeats: usize, tasks: &mut [Task<'_>]) -> Result<Vec<f64>> {
    let mut inner = Vec::with_capacity(tasks.len());
    for f in tasks.iter_mut() {
        let start = Instant::now();
        f()?;
        let once = start.elapsed().max(Duration::from_nanos(1));
        inner.push((MIN_MEASUREMENT.as_nanos() / once.as_nanos()).max(1) as u32);
    }
    let mut times = vec![Vec::with_capacity(repeats); tasks.len()];
    for _ in 0..repeats {
        for ((f, &n), t) in tasks.iter_mut().zip(&inner).zip(times.iter_mut()) {
            let start = Instant::now();
            for _ in 0..n {
                f()?;
            }
            t.push(start.elapsed().as_secs_f64() / n as f64);
        }
    }
    Ok(times
        .into_iter()
        .map(|mut t| {
            t.sort_by(|a, b| a.total_cmp(b));
            t[t.len() / 2]
        })
        .collect())
}

pub fn run_timing(cfg: &Config) -> Result<BenchOutput> {
    let b = &cfg.bench;
    require_nonempty(&b.timing_lengths, "timing length")?;
    if b.timing_repeats < 5 {
        return Err(Error::Invalid(format!("timing needs at least 5 repeats, got {}", b.timing_repeats)));
    }
    let mut rig = Rig::new(cfg)?;
    rig.normalized_mzi = true;
    let sigma = cfg.noise.sigma_w;
    let block = IpdftParams::rvci(b.timing_block, 1);
    let mut out = BenchOutput::new(Experiment::Timing);
    out.reproducible = false;
    out.derive("ipdft_block", b.timing_block);
    out.derive("repeats", b.timing_repeats);
    out.derive("mean_omega_rad_per_sample", MEAN_OMEGA);

    let mut curves = vec![Vec::new(); METHODS.len()];
    for &len in &b.timing_lengths {
        rig.samples = len;
        rig.geom = MziGeometry::new(MEAN_OMEGA * len as f64 / rig.profile.span(), rig.geom.c_amp)?;
        let mzi = rig.mzi(&NoiseModel::new(sigma, cfg.seed)?)?;
        let fit = coarse_sweep_fit(&mzi)?;
        let ekf = ekf_params_for(&fit, sigma);
        let ukf = ukf_params_for(&fit, sigma);
        let cell = format!("L={len}");
        let mut tasks: [Task<'_>; 4] = [
            Box::new(|| ekf_estimate(&mzi, &ekf).map(drop)),
            Box::new(|| ukf_estimate(&mzi, &ukf).map(drop)),
            Box::new(|| hilbert_phase(&mzi).map(drop)),
            Box::new(|| ipdft_estimate(&mzi, &block).map(drop)),
        ];
        let med = median_times(b.timing_repeats, &mut tasks)?;
        for (j, name) in METHODS.iter().enumerate() {
            out.row(name, &cell, "median", med[j], "s");
            curves[j].push(med[j]);
        }
        if len >= ASSERT_LEN {
            out.check(format!("ukf_le_ekf[{cell}]"), med[1] <= med[0], format!("UKF {:.3e} s, EKF {:.3e} s", med[1], med[0]));
            out.check(
                format!("ipdft_le_hilbert[{cell}]"),
                med[3] <= med[2],
                format!("IpDFT(P={}) {:.3e} s, Hilbert {:.3e} s", b.timing_block, med[3], med[2]),
            );
        }
    }
    let xs: Vec<f64> = b.timing_lengths.iter().map(|&l| l as f64).collect();
    let mut plot = LinePlot::new("Execution time", "L (samples)", "median time (s)");
    plot.log_x = true;
    plot.log_y = true;
    for (name, ys) in METHODS.iter().zip(curves) {
        plot = plot.with(Series::new(*name, xs.clone(), ys));
    }
    out.plots.push(("timing".into(), plot));

    let hilbert = count_ops(OpsMethod::HilbertFir { taps: HILBERT_TAPS }, HILBERT_LEN)?;
    out.row("hilbert-fir", &format!("H={HILBERT_TAPS},L={HILBERT_LEN}"), "total_ops", hilbert.total as f64, "ops");
    out.check(
        "ops_hilbert_total",
        hilbert.total == 2 * (HILBERT_TAPS * HILBERT_LEN) as i64,
        format!("2HL = {}", hilbert.total),
    );
    for r in op_count_table()? {
        let cell = format!("P={}", r.block);
        out.row("ipdft-table", &cell, "adds", r.table_adds as f64, "ops");
        out.row("ipdft-table", &cell, "mults", r.table_mults as f64, "ops");
        out.row("split-radix", &cell, "adds", r.measured_adds as f64, "ops");
        out.row("split-radix", &cell, "mults", r.measured_mults as f64, "ops");
        out.check(
            format!("ops_formula[{cell}]"),
            r.formula_exact(),
            format!("count_ops {}/{} vs closed form {:.6}/{:.6}", r.table_adds, r.table_mults, r.formula_adds, r.formula_mults),
        );
        out.check(
            format!("ops_measured[{cell}]"),
            r.measured_matches(),
            format!(
                "instrumented FFT adds {} mults {}, per-block formula adds {} mults {}",
                r.measured_adds, r.measured_mults, r.table_adds, r.table_mults
            ),
        );
    }
    Ok(out)
}

/// Per-block IpDFT cost: the integer counts, the closed forms evaluated in
/// floating point, and the tally of an instrumented split-radix FFT.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OpCountRow {
    pub block: u64,
    pub table_adds: i64,
    pub table_mults: i64,
    pub formula_adds: f64,
    pub formula_mults: f64,
    pub measured_adds: u64,
    pub measured_mults: u64,
}

impl OpCountRow {
    pub fn formula_exact(&self) -> bool {
        self.table_adds as f64 == self.formula_adds.round()
            && self.table_mults as f64 == self.formula_mults.round()
            && (self.formula_adds - self.formula_adds.round()).abs() < 1e-9
            && (self.formula_mults - self.formula_mults.round()).abs() < 1e-9
    }

    pub fn measured_matches(&self) -> bool {
        self.measured_adds as i64 == self.table_adds && self.measured_mults as i64 == self.table_mults
    }
}

pub fn op_count_table() -> Result<Vec<OpCountRow>> {
    OP_BLOCKS
        .iter()
        .map(|&p| {
            let c = count_ops(OpsMethod::Ipdft { block: p }, p)?;
            let pf = p as f64;
            let m = pf.log2();
            let sign = if p.trailing_zeros() % 2 == 0 { 1.0 } else { -1.0 };
            let t = measured_ops(p as usize)?;
            Ok(OpCountRow {
                block: p,
                table_adds: c.adds,
                table_mults: c.mults,
                formula_adds: pf * (4.0 / 3.0 * m - 8.0 / 9.0) - sign / 9.0,
                formula_mults: pf * (2.0 / 3.0 * m - 19.0 / 9.0) + sign / 9.0,
                measured_adds: t.adds,
                measured_mults: t.mults,
            })
        })
        .collect()
}
