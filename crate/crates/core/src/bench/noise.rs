//! Phase-tracking accuracy of the EKF against the Hilbert baseline over
//! SNR, the resulting interferometric error, and the small-phase-noise MSE
//! law.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{require_nonempty, sample_reflectivity, split_results, trials, um, BenchOutput, Experiment};
use crate::config::Config;
use crate::demod::Estimator;
use crate::error::{Error, Result};
use crate::metrics::{mse, mse_values, predicted_mse, MetricsReport, Stats};
use crate::pipeline::{Acquisition, Method, Rig};
use crate::plot::{LinePlot, Series};
use crate::rng::stream;
use crate::sweep_model::ReflectivityProfile;
use crate::synth::NoiseModel;

const RATIO_LIMIT: f64 = 0.1;
const NOISELESS_LIMIT: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 0.1;
const STREAM_PHASE_NOISE: u64 = 10;

const ESTIMATORS: [Estimator; 2] = [Estimator::Ekf, Estimator::Hilbert];

/// Mean squared phase error (rad²) over the central 80% of the sweep, after
/// removing the whole-cycle offset of the unwrapped estimate.
fn phase_mse(est: &[f64], truth: &[f64]) -> Result<f64> {
    let n = truth.len();
    if est.len() != n {
        return Err(Error::Contract("phase estimate length differs from truth".into()));
    }
    let (lo, hi) = (n / 10, n - n / 10);
    let d: Vec<f64> = (lo..hi).map(|i| est[i] - truth[i]).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let offset = (mean / (2.0 * PI)).round() * 2.0 * PI;
    Ok(d.iter().map(|v| (v - offset).powi(2)).sum::<f64>() / d.len() as f64)
}

pub fn run_noise_sweep(cfg: &Config) -> Result<BenchOutput> {
    let b = &cfg.bench;
    require_nonempty(&b.snr_db, "SNR")?;
    let mut rig = Rig::new(cfg)?;
    rig.normalized_mzi = true;
    let dl = rig.geom.dl;
    let truth: Vec<f64> = rig.grid().times.iter().map(|&t| dl * rig.profile.eval_unchecked(t)).collect();
    let power = rig.geom.c_amp * rig.geom.c_amp / 2.0;
    let mut out = BenchOutput::new(Experiment::NoiseSweep);
    out.derive("mzi_normalized", true);
    out.derive("signal_power", power);

    let run_phase = |est: Estimator, noise: NoiseModel| -> Result<f64> {
        let mzi = rig.mzi(&noise)?;
        phase_mse(&est.estimate(&mzi, noise.sigma_w)?.phase, &truth)
    };

    for est in ESTIMATORS {
        let v = run_phase(est, NoiseModel::none())?;
        out.row(&est.name(), "noiseless", "mse", v, "rad^2");
        out.check(format!("noiseless[{}]", est.name()), v < NOISELESS_LIMIT, format!("phase MSE {v:.3e} rad^2"));
    }

    let mut ratios = Vec::new();
    let mut curves = vec![Vec::new(); ESTIMATORS.len()];
    for &snr in &b.snr_db {
        let sigma = NoiseModel::sigma_for_snr(power, snr);
        let cell = format!("snr={snr}dB");
        let mut means = Vec::new();
        for (j, est) in ESTIMATORS.iter().enumerate() {
            let results = trials(b.trials, cfg.seed, |seed| run_phase(*est, NoiseModel::new(sigma, seed)?));
            let (values, failed) = split_results(results);
            let r = MetricsReport::new(est.name(), &cell, "rad^2", values, failed);
            out.report(&r);
            means.push(r.stats.mean);
            curves[j].push(r.stats.mean);
        }
        let ratio = means[0] / means[1];
        out.row("ekf/hilbert", &cell, "ratio", ratio, "");
        out.check(
            format!("ekf_vs_hilbert[{cell}]"),
            ratio <= RATIO_LIMIT,
            format!("EKF {:.3e} / Hilbert {:.3e} = {ratio:.3}", means[0], means[1]),
        );
        ratios.push(ratio);
    }
    out.derive("ratio_by_snr", &ratios);
    out.derive("ratio_monotone_decreasing", ratios.windows(2).all(|w| w[1] <= w[0]));
    let mut plot = LinePlot::new("Phase error vs SNR", "SNR (dB)", "MSE (rad^2)");
    plot.log_y = true;
    for (est, ys) in ESTIMATORS.iter().zip(curves) {
        plot = plot.with(Series::new(est.name(), b.snr_db.clone(), ys));
    }
    out.plots.push(("phase_mse".into(), plot));

    interferometric(cfg, &rig, &mut out)?;

    let points = closed_form_mse(cfg)?;
    for p in &points {
        let cell = format!("sigma_k_sq={:e}", p.sigma_k_sq);
        out.row("closed-form", &cell, "measured", p.measured.mean, "");
        out.row("closed-form", &cell, "predicted", p.predicted, "");
        out.check(
            format!("closed_form[{cell}]"),
            p.passes(),
            format!("measured {:.4e}, predicted {:.4e}, rel. error {:.2}%", p.measured.mean, p.predicted, 100.0 * p.rel_error()),
        );
    }
    Ok(out)
}

/// Calibrated interferogram with a noisy MZI against the same estimator on
/// the noiseless MZI. The interferogram itself is noise-free.
fn interferometric(cfg: &Config, rig: &Rig, out: &mut BenchOutput) -> Result<()> {
    let b = &cfg.bench;
    if b.mse_depths.is_empty() {
        return Ok(());
    }
    let ladder = rig.ladder(cfg.ladder.m_c)?;
    let power = rig.geom.c_amp * rig.geom.c_amp / 2.0;
    let mut plot = LinePlot::new("Interferometric MSE", "SNR (dB)", "MSE");
    plot.log_y = true;
    for &z in &b.mse_depths {
        let refl = ReflectivityProfile::mirror(cfg.sample.r_ref, sample_reflectivity(cfg), z)?;
        let clean = rig.acquire(&refl, &NoiseModel::none())?;
        for est in ESTIMATORS {
            let method = Method::Resample(est);
            let reference = rig.calibrate_acquired(&method, &clean, &ladder, 0.0)?;
            let mut ys = Vec::new();
            for &snr in &b.snr_db {
                let sigma = NoiseModel::sigma_for_snr(power, snr);
                let results = trials(b.trials, cfg.seed, |seed| {
                    let noise = NoiseModel::new(sigma, seed)?;
                    let acq = Acquisition { mzi: rig.mzi(&noise)?, interferogram: clean.interferogram.clone() };
                    let scan = rig.calibrate_acquired(&method, &acq, &ladder, sigma)?;
                    let scan = scan.restrict_to(&reference.k_values);
                    mse(&scan, &reference.restrict_to(&scan.k_values))
                });
                let (values, failed) = split_results(results);
                let r = MetricsReport::new(format!("{}-interferometric", est.name()), format!("snr={snr}dB,z={}", um(z)), "", values, failed);
                ys.push(r.stats.mean);
                out.report(&r);
            }
            plot = plot.with(Series::new(format!("{} {}", est.name(), um(z)), b.snr_db.clone(), ys));
        }
    }
    out.plots.push(("interferometric_mse".into(), plot));
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormPoint {
    pub sigma_k_sq: f64,
    pub measured: Stats,
    pub predicted: f64,
}

impl ClosedFormPoint {
    pub fn rel_error(&self) -> f64 {
        (self.measured.mean - self.predicted).abs() / self.predicted
    }

    pub fn passes(&self) -> bool {
        self.rel_error() <= CLOSED_FORM_TOL
    }
}

/// Monte-Carlo MSE between a unit mirror scan `cos(2kz)` on the ladder and
/// the same scan with `N(0, σ²)` phase noise, at a random depth per trial.
pub fn closed_form_mse(cfg: &Config) -> Result<Vec<ClosedFormPoint>> {
    let b = &cfg.bench;
    if b.closed_form_trials == 0 {
        return Err(Error::Invalid("closed-form check needs at least one trial".into()));
    }
    let rig = Rig::new(cfg)?;
    let ladder = rig.ladder(cfg.ladder.m_c)?;
    let r_prod = 1.0;
    b.sigma_k_sq
        .iter()
        .map(|&s2| {
            let sigma = s2.sqrt();
            let results = trials(b.closed_form_trials, cfg.seed, |seed| {
                let mut r = stream(seed, STREAM_PHASE_NOISE);
                let z: f64 = r.gen_range(100e-6..1.5e-3);
                let (clean, noisy): (Vec<f64>, Vec<f64>) = ladder
                    .levels
                    .iter()
                    .map(|&k| {
                        let e: f64 = r.sample(StandardNormal);
                        ((2.0 * k * z).cos(), (2.0 * k * z + sigma * e).cos())
                    })
                    .unzip();
                mse_values(&clean, &noisy)
            });
            let (values, _) = split_results(results);
            Ok(ClosedFormPoint { sigma_k_sq: s2, measured: Stats::of(&values), predicted: predicted_mse(s2, r_prod)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_mse_ignores_whole_cycles() {
        let truth: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let est: Vec<f64> = truth.iter().map(|t| t - 4.0 * PI + 0.01).collect();
        assert!((phase_mse(&est, &truth).unwrap() - 1e-4).abs() < 1e-15);
    }
}
