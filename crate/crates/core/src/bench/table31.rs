//! Axial resolution over depth and ladder density, envelope against Hilbert.

use serde::Serialize;

use super::{require_nonempty, sample_reflectivity, split_results, trials, um, BenchOutput, Experiment};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics::{fwhm, fwhm_spread, MetricsReport, Stats};
use crate::pipeline::{Method, Rig};
use crate::plot::{LinePlot, Series};
use crate::sweep_model::{coherence_length, ReflectivityProfile};
use crate::synth::NoiseModel;

const TOL: f64 = 0.15;
/// Allowed relative gap between the two methods in one cell.
const PARITY_TOL: f64 = 0.05;
/// Ratio the uncalibrated width must reach.
const NECESSITY_RATIO: f64 = 3.0;
/// Quadratic-to-linear sweep term ratio required for the comparison.
const MIN_NONLINEARITY: f64 = 0.2;
/// Depths below this are excluded from the width measurement (DC term).
const MIN_DEPTH: f64 = 100e-6;

pub fn run_table31(cfg: &Config) -> Result<BenchOutput> {
    let b = &cfg.bench;
    if b.trials < 10 {
        return Err(Error::Invalid(format!("table31 needs at least 10 trials, got {}", b.trials)));
    }
    require_nonempty(&b.depths, "depth")?;
    require_nonempty(&b.m_c, "M_C")?;
    let rig = Rig::new(cfg)?;
    let target = coherence_length(&rig.spec);
    let r_s = sample_reflectivity(cfg);
    let mut out = BenchOutput::new(Experiment::Table31);
    out.derive("target_fwhm_m", target);

    let mut means: Vec<(String, String, f64)> = Vec::new();
    let mut plot = LinePlot::new("Axial resolution", "depth (um)", "FWHM (um)");
    for name in ["envelope", "hilbert"] {
        for &m_c in &b.m_c {
            let method = Method::parse_with(name, m_c, cfg.pipeline.block_len)?;
            let ladder = rig.ladder(m_c)?;
            let mut ys = Vec::new();
            for &z in &b.depths {
                let refl = ReflectivityProfile::mirror(cfg.sample.r_ref, r_s, z)?;
                let results = trials(b.trials, cfg.seed, |seed| {
                    let noise = NoiseModel::new(cfg.noise.sigma_w, seed)?;
                    let scan = rig.calibrate(&method, &refl, &ladder, &noise)?;
                    fwhm(&rig.ascan(&scan)?, Some(z))
                });
                let (values, failed) = split_results(results);
                let cell = format!("z={},M_C={m_c}", um(z));
                let r = MetricsReport::new(name, &cell, "m", values, failed);
                let m = r.stats.mean;
                out.report(&r);
                out.check(
                    format!("fwhm[{name},{cell}]"),
                    r.stats.count > 0 && (m - target).abs() <= TOL * target,
                    format!("mean {:.3} um vs {:.3} um +-15%, {failed} failed trials", m * 1e6, target * 1e6),
                );
                means.push((name.to_string(), cell, m));
                ys.push(m * 1e6);
            }
            let xs = b.depths.iter().map(|z| z * 1e6).collect();
            plot = plot.with(Series::new(format!("{name} M_C={m_c}"), xs, ys));
        }
    }
    out.plots.push(("fwhm".into(), plot));

    let finite: Vec<f64> = means.iter().map(|m| m.2).filter(|v| v.is_finite()).collect();
    let (lo, hi) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    out.check(
        "flatness",
        finite.len() == means.len() && hi - lo <= TOL * target,
        format!("cell means span {:.3}..{:.3} um", lo * 1e6, hi * 1e6),
    );
    for (_, cell, env) in means.iter().filter(|m| m.0 == "envelope") {
        let hil = means.iter().find(|m| m.0 == "hilbert" && &m.1 == cell).map_or(f64::NAN, |m| m.2);
        let gap = (env - hil).abs() / hil;
        out.check(
            format!("parity[{cell}]"),
            gap <= PARITY_TOL,
            format!("envelope {:.3} um, hilbert {:.3} um", env * 1e6, hil * 1e6),
        );
    }

    let z = b.depths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nec = calibration_necessity(cfg, z, b.trials)?;
    out.check(
        "calibration_necessity",
        nec.passes(),
        format!(
            "uncalibrated {:.1} um vs calibrated {:.2} um at {} (ratio {:.2}), nonlinearity {:.2}",
            nec.uncalibrated.mean * 1e6,
            nec.calibrated.mean * 1e6,
            um(z),
            nec.ratio,
            nec.nonlinearity
        ),
    );
    out.derive("calibration_necessity", &nec);
    Ok(out)
}

/// Peak widths with and without calibration at one depth.
#[derive(Debug, Clone, Serialize)]
pub struct Necessity {
    pub depth: f64,
    /// `|a2 t²| / (a1 t)` of the configured sweep.
    pub nonlinearity: f64,
    pub uncalibrated: Stats,
    pub calibrated: Stats,
    pub ratio: f64,
}

impl Necessity {
    pub fn passes(&self) -> bool {
        self.nonlinearity >= MIN_NONLINEARITY && self.ratio >= NECESSITY_RATIO
    }
}

/// Half-maximum spread beyond 100 µm of the uniform-time A-scan against the
/// Hilbert-resampled one.
pub fn calibration_necessity(cfg: &Config, z: f64, n_trials: usize) -> Result<Necessity> {
    let rig = Rig::new(cfg)?;
    let p = &rig.profile;
    let nonlinearity = (p.a2 * p.t_scan * p.t_scan).abs() / (p.a1 * p.t_scan);
    let refl = ReflectivityProfile::mirror(cfg.sample.r_ref, sample_reflectivity(cfg), z)?;
    let ladder = rig.ladder(cfg.ladder.m_c)?;
    let method = Method::parse("hilbert")?;
    let results = trials(n_trials, cfg.seed, |seed| -> Result<(f64, f64)> {
        let noise = NoiseModel::new(cfg.noise.sigma_w, seed)?;
        let acq = rig.acquire(&refl, &noise)?;
        let raw = fwhm_spread(&rig.ascan(&rig.uncalibrated(&acq)?)?, MIN_DEPTH)?;
        let cal = fwhm_spread(&rig.ascan(&rig.calibrate_acquired(&method, &acq, &ladder, cfg.noise.sigma_w)?)?, MIN_DEPTH)?;
        Ok((raw, cal))
    });
    let (mut raw, mut cal) = (Vec::new(), Vec::new());
    for (u, c) in results.into_iter().flatten() {
        raw.push(u);
        cal.push(c);
    }
    let (uncalibrated, calibrated) = (Stats::of(&raw), Stats::of(&cal));
    Ok(Necessity { depth: z, nonlinearity, uncalibrated, calibrated, ratio: uncalibrated.mean / calibrated.mean })
}
