//! The conventional path: estimate k̂[n] from the sampled MZI, look up the
//! times of the ladder levels, and interpolate the sampled interferogram there.

use serde::{Deserialize, Serialize};

use super::interp::{InterpKind, Interpolator};
use super::CalibratedScan;
use crate::demod::Estimator;
use crate::error::{Error, Result};
use crate::lcs::{find_crossings_dense, CalibClock, LevelLadder};
use crate::signal::SampledSignal;
use crate::sweep_model::SweepProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lookup {
    /// Linear inverse interpolation of k̂ inside the bracketing interval.
    Inverse,
    /// Time of the sample whose k̂ is closest to the level.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleConfig {
    pub interp: InterpKind,
    pub lookup: Lookup,
    /// Recorded in the scan metadata only.
    pub osr: Option<f64>,
}

impl ResampleConfig {
    pub fn new(interp: InterpKind) -> Self {
        ResampleConfig { interp, lookup: Lookup::Inverse, osr: None }
    }
}

/// Converts an MZI phase track to wavenumber. The phase is known modulo 2π
/// only; the whole number of cycles is taken from a nominal sweep over the
/// central 80% of the track.
pub fn anchor_wavenumber(phase: &[f64], times: &[f64], dl: f64, nominal: &SweepProfile) -> Result<Vec<f64>> {
    let n = phase.len().min(times.len());
    if n < 2 {
        return Err(Error::Invalid("phase track too short to anchor".into()));
    }
    let (lo, hi) = (n / 10, n - n / 10);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mean: f64 = (lo..hi)
        .map(|i| (dl * nominal.eval_unchecked(times[i]) - phase[i]) / two_pi)
        .sum::<f64>()
        / (hi - lo) as f64;
    let shift = mean.round() * two_pi;
    Ok(phase[..n].iter().map(|p| (p + shift) / dl).collect())
}

/// Resampling from an already estimated wavenumber track.
pub fn resample_from_track(
    times: &[f64],
    k_hat: &[f64],
    interf: &SampledSignal,
    ladder: &LevelLadder,
    cfg: &ResampleConfig,
) -> Result<CalibratedScan> {
    let clock = match cfg.lookup {
        Lookup::Inverse => find_crossings_dense(times, k_hat, ladder)?,
        Lookup::Nearest => nearest_times(times, k_hat, ladder),
    };
    resample_at_clock(&clock, interf, ladder, cfg)
}

/// Interpolates the sampled interferogram at the clock events.
pub fn resample_at_clock(
    clock: &CalibClock,
    interf: &SampledSignal,
    ladder: &LevelLadder,
    cfg: &ResampleConfig,
) -> Result<CalibratedScan> {
    let it = Interpolator::new(interf, cfg.interp)?;
    let mut skipped = clock.skipped;
    let mut k_values = Vec::with_capacity(clock.len());
    let mut samples = Vec::with_capacity(clock.len());
    for (t, &i) in clock.events.iter().zip(&clock.level_index) {
        let level = *ladder
            .levels
            .get(i)
            .ok_or_else(|| Error::Contract(format!("clock refers to level {i} of {}", ladder.len())))?;
        match it.eval(*t) {
            Some(v) => {
                k_values.push(level);
                samples.push(v);
            }
            None => skipped += 1,
        }
    }
    let mut scan = CalibratedScan::new(k_values, samples, "resample")?;
    scan.meta.interp = Some(cfg.interp);
    scan.meta.osr = cfg.osr;
    scan.meta.skipped = skipped;
    Ok(scan)
}

fn nearest_times(times: &[f64], k: &[f64], ladder: &LevelLadder) -> CalibClock {
    let (mut ev, mut idx, mut skipped) = (Vec::new(), Vec::new(), 0);
    let (kmin, kmax) = k.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let mut j = 0;
    for (i, &level) in ladder.levels.iter().enumerate() {
        if level < kmin || level > kmax {
            skipped += 1;
            continue;
        }
        while j + 1 < k.len() && (k[j + 1] - level).abs() <= (k[j] - level).abs() {
            j += 1;
        }
        if ev.last().map_or(true, |&p| times[j] > p) {
            ev.push(times[j]);
            idx.push(i);
        } else {
            skipped += 1;
        }
    }
    CalibClock { events: ev, level_index: idx, skipped }
}

/// Full baseline: estimator, anchoring against `nominal`, lookup, interpolation.
#[allow(clippy::too_many_arguments)]
pub fn resample_calibrate(
    mzi: &SampledSignal,
    interf: &SampledSignal,
    estimator: &Estimator,
    sigma_w: f64,
    dl: f64,
    nominal: &SweepProfile,
    ladder: &LevelLadder,
    cfg: &ResampleConfig,
) -> Result<CalibratedScan> {
    let est = estimator.estimate(mzi, sigma_w)?;
    let k_hat = anchor_wavenumber(&est.phase, &mzi.times, dl, nominal)?;
    let mut scan = resample_from_track(&mzi.times[..k_hat.len()], &k_hat, interf, ladder, cfg)?;
    scan.meta.estimator = Some(estimator.name());
    Ok(scan)
}

/// The uniformly sampled interferogram read as if the sweep were linear
/// between `k_start` and `k_end`.
pub fn uncalibrated(interf: &SampledSignal, k_start: f64, k_end: f64) -> Result<CalibratedScan> {
    let n = interf.len();
    if n < 2 {
        return Err(Error::Invalid("uncalibrated scan needs two samples".into()));
    }
    let dk = (k_end - k_start) / (n - 1) as f64;
    let k = (0..n).map(|i| k_start + i as f64 * dk).collect();
    CalibratedScan::new(k, interf.values.clone(), "uncalibrated")
}
