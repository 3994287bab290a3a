//! Sensitivity roll-off with depth under finite spectral resolution.

use super::{require_nonempty, sample_reflectivity, um, BenchOutput, Experiment};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics::{rolloff_curve, RolloffCurve};
use crate::pipeline::{Method, Rig};
use crate::plot::{LinePlot, Series};
use crate::sweep_model::{k_spacing, max_depth, rolloff_6db, ReflectivityProfile};
use crate::synth::NoiseModel;

const Z6_TOL: f64 = 0.1;
/// Allowed rise (dB) between neighbouring depths of a decaying curve.
const MONOTONE_SLACK_DB: f64 = 0.5;
/// Allowed spread (dB) of the ideal curve.
const IDEAL_FLAT_DB: f64 = 1.0;
const FFT_FACTOR: usize = 8;
/// Half-width of the window searched for the peak around each depth.
const PEAK_WINDOW: f64 = 20e-6;

fn curve(cfg: &Config, rig: &Rig) -> Result<RolloffCurve> {
    let ladder = rig.ladder(cfg.ladder.m_c)?;
    let r_s = sample_reflectivity(cfg);
    rolloff_curve(&cfg.bench.rolloff_depths, |z| {
        let refl = ReflectivityProfile::mirror(cfg.sample.r_ref, r_s, z)?;
        let scan = rig.calibrate(&Method::Realtime, &refl, &ladder, &NoiseModel::none())?;
        let a = rig.ascan(&scan)?;
        a.depth
            .iter()
            .zip(&a.magnitude)
            .filter(|(d, _)| (*d - z).abs() <= PEAK_WINDOW)
            .map(|(_, m)| *m)
            .reduce(f64::max)
            .ok_or(Error::NoPeak)
    })
}

pub fn run_rolloff(cfg: &Config) -> Result<BenchOutput> {
    let b = &cfg.bench;
    require_nonempty(&b.rolloff_depths, "roll-off depth")?;
    let mut rig = Rig::new(cfg)?;
    rig.fft_factor = FFT_FACTOR;
    let z_max = max_depth(rig.ladder(cfg.ladder.m_c)?.spacing())?;
    if let Some(z) = b.rolloff_depths.iter().find(|&&z| !(z > 0.0 && z < z_max)) {
        return Err(Error::Domain { what: "roll-off depth", value: *z, lo: 0.0, hi: z_max });
    }
    let delta_r_k = k_spacing(cfg.source.lambda0, b.rolloff_resolution);
    let predicted = rolloff_6db(delta_r_k)?;
    let mut out = BenchOutput::new(Experiment::Rolloff);
    out.derive("delta_r_k", delta_r_k);
    out.derive("predicted_6db_depth_m", predicted);

    rig.delta_r_k = 0.0;
    let ideal = curve(cfg, &rig)?;
    rig.delta_r_k = delta_r_k;
    let blurred = curve(cfg, &rig)?;

    for (name, c) in [("ideal", &ideal), ("blurred", &blurred)] {
        for (z, db) in c.depth.iter().zip(&c.db) {
            out.row(name, &format!("z={}", um(*z)), "rolloff", *db, "dB");
        }
        out.check(format!("no_failures[{name}]"), c.failures.is_empty(), format!("{} depths without a peak", c.failures.len()));
    }
    let (lo, hi) = ideal.db.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    out.check("ideal_flat", hi - lo <= IDEAL_FLAT_DB, format!("ideal curve spans {lo:.3}..{hi:.3} dB"));
    out.check(
        "blurred_decays",
        blurred.db.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK_DB),
        format!("last point {:.2} dB", blurred.db.last().copied().unwrap_or(f64::NAN)),
    );
    let measured = blurred.six_db_depth;
    out.derive("measured_6db_depth_m", measured);
    let detail = match measured {
        Some(z) => format!("measured {:.4} mm vs predicted {:.4} mm", z * 1e3, predicted * 1e3),
        None => format!("curve never reached -6 dB; predicted {:.4} mm", predicted * 1e3),
    };
    out.check("six_db_depth", measured.is_some_and(|z| (z - predicted).abs() <= Z6_TOL * predicted), detail);

    let mut plot = LinePlot::new("Sensitivity roll-off", "depth (mm)", "peak (dB)");
    for (name, c) in [("ideal", &ideal), ("blurred", &blurred)] {
        plot = plot.with(Series::new(name, c.depth.iter().map(|z| z * 1e3).collect(), c.db.clone()));
    }
    out.plots.push(("rolloff".into(), plot));
    Ok(out)
}
