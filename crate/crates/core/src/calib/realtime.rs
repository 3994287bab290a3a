//! The LCS-clocked path: ADC2 samples the interferogram at the clock events.

use super::CalibratedScan;
use crate::error::{Error, Result};
use crate::lcs::{CalibClock, LevelLadder};
use crate::synth::{AdcModel, InterferogramModel, NoiseModel, SpectralModel, STREAM_INTERF};
use crate::sweep_model::{ReflectivityProfile, SourceSpectrum, SweepProfile};

/// Samples `model` at every clock event. The wavenumber seen at an event is
/// `k(t)`, snapped to its ladder level when the two agree to `tol_k`.
pub fn realtime_from_clock<M: SpectralModel + ?Sized>(
    model: &M,
    profile: &SweepProfile,
    ladder: &LevelLadder,
    clock: &CalibClock,
    noise: &NoiseModel,
    adc: Option<&AdcModel>,
) -> Result<CalibratedScan> {
    if clock.is_empty() {
        return Err(Error::Domain { what: "clock event count", value: 0.0, lo: 1.0, hi: f64::INFINITY });
    }
    let tol = profile.tol_k();
    let mut k_values = Vec::with_capacity(clock.len());
    let mut samples = Vec::with_capacity(clock.len());
    for (&t, &i) in clock.events.iter().zip(&clock.level_index) {
        let level = *ladder
            .levels
            .get(i)
            .ok_or_else(|| Error::Contract(format!("clock refers to level {i} of {}", ladder.len())))?;
        let k_t = profile.eval(t)?;
        let k = if (k_t - level).abs() <= tol { level } else { k_t };
        k_values.push(level);
        samples.push(model.eval(k, t));
    }
    noise.add(&mut samples, STREAM_INTERF);
    if let Some(adc) = adc {
        for v in samples.iter_mut() {
            *v = adc.quantize_value(*v).0;
        }
    }
    let mut scan = CalibratedScan::new(k_values, samples, "realtime")?;
    scan.meta.skipped = clock.skipped;
    Ok(scan)
}

pub fn realtime_calibrate(
    profile: &SweepProfile,
    refl: &ReflectivityProfile,
    spec: &SourceSpectrum,
    ladder: &LevelLadder,
    clock: &CalibClock,
    noise: &NoiseModel,
) -> Result<CalibratedScan> {
    let model = InterferogramModel::new(refl.clone(), Some(*spec), false);
    realtime_from_clock(&model, profile, ladder, clock, noise, None)
}
