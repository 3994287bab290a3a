//! Resampling error against oversampling ratio, ADC resolution and
//! interpolation kind, with the real-time path as the reference line.
//!
//! All paths share the exact calibrating clock, so the surface isolates the
//! cost of interpolating uniformly sampled data. Each trial jitters the
//! mirror depth by ±0.5 µm and the ADC start time by up to one period.

use std::f64::consts::PI;

use rand::Rng;

use super::{require_nonempty, trials, BenchOutput, Experiment};
use crate::calib::{realtime_from_clock, resample_at_clock, CalibratedScan, InterpKind, ResampleConfig};
use crate::config::Config;
use crate::error::Result;
use crate::lcs::{find_crossings, CalibClock, LevelLadder};
use crate::metrics::{mse, MetricsReport};
use crate::pipeline::Rig;
use crate::plot::{LinePlot, Series};
use crate::rng::stream;
use crate::signal::Grid;
use crate::sweep_model::ReflectivityProfile;
use crate::synth::{quantize, AdcModel, DepthPerturbation, InterferogramModel, NoiseModel};

const STREAM_JITTER: u64 = 9;
const DEPTH_JITTER: f64 = 0.5e-6;
const FLAT_TOL: f64 = 0.01;
const FLOOR_FACTOR: f64 = 3.0;
const PERTURBATION_TOL: f64 = 0.2;
/// Perturbation onsets are drawn from `[0, PERTURBATION_WINDOW)` seconds.
const PERTURBATION_WINDOW: f64 = 0.01;
/// OSR values at or above this are compared for the perturbation floor.
const PERTURBATION_MIN_OSR: f64 = 8.0;

struct Setup<'a> {
    rig: &'a Rig,
    ladder: LevelLadder,
    clock: CalibClock,
    depth: f64,
    f_max: f64,
    full_scale: f64,
    perturbation: Option<(f64, f64)>,
}

impl Setup<'_> {
    /// MSE of the real-time path and of each interpolation kind.
    fn trial(&self, seed: u64, bits: u32, osr: f64, kinds: &[InterpKind]) -> Result<Vec<f64>> {
        let rate = osr * 2.0 * self.f_max;
        let adc = AdcModel::new(bits, self.full_scale, rate)?;
        let mut r = stream(seed, STREAM_JITTER);
        let z = self.depth + r.gen_range(-DEPTH_JITTER..DEPTH_JITTER);
        let t0 = r.gen_range(0.0..1.0 / rate);
        let refl = ReflectivityProfile::mirror(1.0, 1.0, z)?;
        let mut model = InterferogramModel::new(refl, Some(self.rig.spec), false);
        let p = &self.rig.profile;
        let none = NoiseModel::none();
        let ideal = realtime_from_clock(&model, p, &self.ladder, &self.clock, &none, None)?;
        if let Some((amp, freq)) = self.perturbation {
            let t_start = r.gen_range(0.0..PERTURBATION_WINDOW);
            model = model.with_perturbation(DepthPerturbation { amp, omega: 2.0 * PI * freq, t_start });
        }
        let rt = realtime_from_clock(&model, p, &self.ladder, &self.clock, &none, Some(&adc))?;
        let mut v = vec![mse(&rt, &ideal)?];
        let grid = Grid::within_scan(p, t0, rate)?;
        let sig = quantize(&model.sample(p, &grid, &none)?, &adc).signal;
        for &kind in kinds {
            let mut cfg = ResampleConfig::new(kind);
            cfg.osr = Some(osr);
            let rs = resample_at_clock(&self.clock, &sig, &self.ladder, &cfg)?;
            let reference: CalibratedScan = ideal.restrict_to(&rs.k_values);
            v.push(mse(&rs, &reference)?);
        }
        Ok(v)
    }

    /// Mean over trials of each path; failed trials are counted per cell.
    fn cell(&self, cfg: &Config, bits: u32, osr: f64, kinds: &[InterpKind]) -> (Vec<Vec<f64>>, usize) {
        let results = trials(cfg.bench.trials, cfg.seed, |seed| self.trial(seed, bits, osr, kinds));
        let mut cols = vec![Vec::new(); kinds.len() + 1];
        let mut failed = 0;
        for r in results {
            match r {
                Ok(v) => cols.iter_mut().zip(v).for_each(|(c, x)| c.push(x)),
                Err(e) => {
                    log::debug!("osr trial failed: {e}");
                    failed += 1;
                }
            }
        }
        (cols, failed)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

pub fn run_osr_surface(cfg: &Config) -> Result<BenchOutput> {
    let b = &cfg.bench;
    require_nonempty(&b.osr, "OSR")?;
    require_nonempty(&b.bits, "bits")?;
    require_nonempty(&b.interp, "interpolation")?;
    let rig = Rig::new(cfg)?;
    let ladder = rig.ladder(cfg.ladder.m_c)?;
    let clock = find_crossings(&rig.profile, &ladder);
    let f_max = rig.max_fringe_rate(b.osr_depth + DEPTH_JITTER);
    let mut setup = Setup { rig: &rig, ladder, clock, depth: b.osr_depth, f_max, full_scale: cfg.adc.full_scale, perturbation: None };
    let kinds = &b.interp;
    let mut out = BenchOutput::new(Experiment::OsrSurface);
    out.derive("max_fringe_rate_hz", f_max);

    let mut plot = LinePlot::new("Resampling MSE vs OSR", "OSR", "MSE");
    plot.log_x = true;
    plot.log_y = true;
    for &bits in &b.bits {
        let floor = AdcModel::new(bits, cfg.adc.full_scale, 1.0)?.noise_floor();
        let q = format!("bits={bits}");
        // surface[path][osr]; path 0 is real-time.
        let mut surface = vec![Vec::new(); kinds.len() + 1];
        for &osr in &b.osr {
            let (cols, failed) = setup.cell(cfg, bits, osr, kinds);
            let cell = format!("osr={osr},{q}");
            let names = std::iter::once("realtime").chain(kinds.iter().map(|k| k.name()));
            for ((name, col), s) in names.zip(cols).zip(surface.iter_mut()) {
                let r = MetricsReport::new(name, &cell, "", col, failed);
                s.push(r.stats.mean);
                out.report(&r);
            }
        }

        for (kind, s) in kinds.iter().zip(&surface[1..]) {
            out.check(
                format!("decreasing[{},{q}]", kind.name()),
                s.windows(2).all(|w| w[1] < w[0]),
                fmt_list(s),
            );
        }
        let rt = &surface[0];
        let (lo, hi) = rt.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let rt_mean = mean(rt);
        out.check(format!("realtime_flat[{q}]"), (hi - lo) / rt_mean < FLAT_TOL, format!("realtime MSE {lo:.4e}..{hi:.4e}"));
        out.check(
            format!("realtime_floor[{q}]"),
            rt_mean <= FLOOR_FACTOR * floor && rt_mean >= floor / FLOOR_FACTOR,
            format!("realtime {rt_mean:.4e} vs floor {floor:.4e}"),
        );
        let order = [InterpKind::Previous, InterpKind::Linear, InterpKind::CubicSpline];
        let idx: Vec<Option<usize>> = order.iter().map(|k| kinds.iter().position(|x| x == k)).collect();
        if let [Some(p), Some(l), Some(c)] = idx[..] {
            for (j, osr) in b.osr.iter().enumerate() {
                let (mp, ml, mc) = (surface[p + 1][j], surface[l + 1][j], surface[c + 1][j]);
                out.check(
                    format!("ordering[osr={osr},{q}]"),
                    mp >= ml && ml >= mc,
                    format!("previous {mp:.3e}, linear {ml:.3e}, spline {mc:.3e}"),
                );
            }
        }
        if let Some(l) = idx[1] {
            let lin = &surface[l + 1];
            out.check(
                format!("linear_above_realtime[{q}]"),
                lin.iter().zip(rt).all(|(a, r)| a > r),
                format!("min linear {:.3e}, realtime {rt_mean:.3e}", lin.iter().copied().fold(f64::INFINITY, f64::min)),
            );
        }
        for (name, s) in std::iter::once("realtime").chain(kinds.iter().map(|k| k.name())).zip(&surface) {
            plot = plot.with(Series::new(format!("{name} {q}"), b.osr.clone(), s.clone()));
        }
    }
    out.plots.push(("mse_vs_osr".into(), plot));

    let high: Vec<f64> = b.osr.iter().copied().filter(|&o| o >= PERTURBATION_MIN_OSR).collect();
    if high.len() >= 2 {
        let bits = *b.bits.iter().max().unwrap_or(&cfg.adc.bits);
        setup.perturbation = Some((b.perturbation_amp, b.perturbation_freq));
        let mut surface = vec![Vec::new(); kinds.len() + 1];
        for &osr in &high {
            let (cols, failed) = setup.cell(cfg, bits, osr, kinds);
            let cell = format!("osr={osr},bits={bits}");
            let names = std::iter::once("realtime").chain(kinds.iter().map(|k| k.name()));
            for ((name, col), s) in names.zip(cols).zip(surface.iter_mut()) {
                let r = MetricsReport::new(format!("{name}-perturbed"), &cell, "", col, failed);
                s.push(r.stats.mean);
                out.report(&r);
            }
        }
        for (kind, s) in kinds.iter().zip(&surface[1..]) {
            let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            out.check(
                format!("perturbation_floor[{}]", kind.name()),
                hi <= (1.0 + PERTURBATION_TOL) * lo,
                format!("MSE {lo:.4e}..{hi:.4e} over OSR {high:?}"),
            );
        }
    } else {
        out.derive("perturbation_floor", "skipped: fewer than two OSR values >= 8");
    }
    Ok(out)
}
