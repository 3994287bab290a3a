//! Envelope equalization and the level-crossing phase read-out built on it.

use std::f64::consts::PI;

use super::PhaseEstimate;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// Delay applied to the MZI before division, in samples.
pub const EQUALIZER_DELAY: usize = 4;
const LPF: [f64; 4] = [0.25; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    /// `mzi[n] / envelope[n + 4]`, stamped with the MZI sample times.
    pub equalized: SampledSignal,
    pub envelope: SampledSignal,
    /// Fraction of samples where the envelope fell under the division guard.
    pub low_fraction: f64,
}

/// Square, 4-tap moving average, ×2, square root.
pub fn envelope(values: &[f64]) -> Vec<f64> {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    (0..sq.len())
        .map(|n| {
            let lp: f64 = LPF
                .iter()
                .enumerate()
                .map(|(i, c)| c * sq[n.saturating_sub(i)])
                .sum();
            (2.0 * lp).sqrt()
        })
        .collect()
}

pub fn envelope_equalize(mzi: &SampledSignal) -> Result<Equalized> {
    mzi.require_uniform()?;
    let n = mzi.len();
    if n <= EQUALIZER_DELAY + 4 {
        return Err(Error::Invalid(format!("envelope equalizer needs more than 8 samples, got {n}")));
    }
    let env = envelope(&mzi.values);
    let peak = env.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate("all-zero calibrating signal".into()));
    }
    let guard = 1e-3 * peak;
    let mut low = 0usize;
    let m = n - EQUALIZER_DELAY;
    let values: Vec<f64> = (0..m)
        .map(|i| {
            let e = env[i + EQUALIZER_DELAY];
            if e < guard {
                low += 1;
            }
            (mzi.values[i] / e.max(guard)).clamp(-1.0, 1.0)
        })
        .collect();
    let low_fraction = low as f64 / m as f64;
    if low_fraction > 0.01 {
        log::warn!("envelope under the division guard on {:.1}% of samples", 100.0 * low_fraction);
    }
    let equalized = SampledSignal {
        times: mzi.times[..m].to_vec(),
        values,
        rate: mzi.rate,
    };
    Ok(Equalized { equalized, envelope: mzi.with_values(env), low_fraction })
}

/// Level-crossing event on the equalized signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEvent {
    /// Fractional sample index.
    pub index: f64,
    /// Unwrapped MZI phase assigned to the event.
    pub phase: f64,
}

/// Crossings of the amplitude levels `cos θ_i`, `θ_i = (i + ½)·2π/M_C`.
///
/// A falling crossing of `cos θ` marks phase `θ`, a rising one `2π − θ`;
/// events that would move the phase backwards (noise retraces) are dropped.
pub fn level_events(x: &[f64], m_c: usize) -> Result<Vec<PhaseEvent>> {
    if m_c < 4 || m_c % 2 != 0 {
        return Err(Error::Invalid(format!("M_C must be an even number >= 4, got {m_c}")));
    }
    let step = 2.0 * PI / m_c as f64;
    let thetas: Vec<f64> = (0..m_c / 2).map(|i| (i as f64 + 0.5) * step).collect();
    let levels: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    let mut events = Vec::new();
    let mut last: Option<f64> = None;
    for n in 1..x.len() {
        let (a, b) = (x[n - 1], x[n]);
        if a == b {
            continue;
        }
        let falling = b < a;
        let mut crossed: Vec<usize> = (0..levels.len())
            .filter(|&i| {
                let l = levels[i];
                if falling {
                    a > l && b <= l
                } else {
                    a < l && b >= l
                }
            })
            .collect();
        // Order the crossings in time within the interval.
        if !falling {
            crossed.reverse();
        }
        for i in crossed {
            let frac = (levels[i] - a) / (b - a);
            let wrapped = if falling { thetas[i] } else { 2.0 * PI - thetas[i] };
            let phase = match last {
                None => wrapped,
                Some(p) => {
                    let ahead = (wrapped - p).rem_euclid(2.0 * PI);
                    if ahead == 0.0 || ahead >= PI {
                        continue;
                    }
                    p + ahead
                }
            };
            last = Some(phase);
            events.push(PhaseEvent { index: (n - 1) as f64 + frac, phase });
        }
    }
    Ok(events)
}

/// Piecewise-linear phase through the events, extended at both ends with the
/// nearest segment's slope.
pub fn interpolate_events(events: &[PhaseEvent], len: usize) -> Result<Vec<f64>> {
    if events.len() < 2 {
        return Err(Error::Degenerate("fewer than two level crossings".into()));
    }
    let mut out = Vec::with_capacity(len);
    let mut j = 0;
    for n in 0..len {
        let x = n as f64;
        while j + 2 < events.len() && events[j + 1].index < x {
            j += 1;
        }
        let (e0, e1) = (events[j], events[j + 1]);
        let slope = (e1.phase - e0.phase) / (e1.index - e0.index);
        out.push(e0.phase + slope * (x - e0.index));
    }
    Ok(out)
}

/// Phase from the equalized MZI using `m_c` crossings per fringe.
pub fn envelope_phase(mzi: &SampledSignal, m_c: usize) -> Result<PhaseEstimate> {
    let eq = envelope_equalize(mzi)?;
    let events = level_events(&eq.equalized.values, m_c)?;
    let phase = interpolate_events(&events, mzi.len())?;
    Ok(PhaseEstimate { phase, amplitude: Some(eq.envelope.values), blocks: None })
}
