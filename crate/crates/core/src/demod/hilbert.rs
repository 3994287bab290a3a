use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::PhaseEstimate;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// Removes 2π jumps between successive samples, greedily.
pub fn unwrap_in_place(phase: &mut [f64]) {
    let mut offset = 0.0;
    let mut prev = match phase.first() {
        Some(&p) => p,
        None => return,
    };
    for p in phase.iter_mut().skip(1) {
        let raw = *p;
        let d = raw - prev;
        offset -= 2.0 * PI * (d / (2.0 * PI)).round();
        prev = raw;
        *p = raw + offset;
    }
}

/// Analytic signal by zeroing the negative half of the spectrum.
pub fn analytic_signal(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let half = n / 2;
    for (k, b) in buf.iter_mut().enumerate() {
        let h = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *b *= h / n as f64;
    }
    inv.process(&mut buf);
    buf
}

pub fn hilbert_phase(mzi: &SampledSignal) -> Result<PhaseEstimate> {
    mzi.require_uniform()?;
    let n = mzi.len();
    if n < 16 {
        return Err(Error::Invalid(format!("Hilbert estimator needs >= 16 samples, got {n}")));
    }
    let mean = mzi.values.iter().sum::<f64>() / n as f64;
    let var = mzi.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if !(var > 1e-24 * (mean * mean).max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate("constant signal has no analytic phase".into()));
    }
    let z = analytic_signal(&mzi.values);
    let mut phase: Vec<f64> = z.iter().map(|c| c.im.atan2(c.re)).collect();
    unwrap_in_place(&mut phase);
    let amplitude = z.iter().map(|c| c.norm()).collect();
    Ok(PhaseEstimate { phase, amplitude: Some(amplitude), blocks: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_slope() {
        let n = 4096;
        let w = 2.0 * PI * 64.0 / n as f64;
        let v: Vec<f64> = (0..n).map(|i| (w * i as f64 + 0.3).cos()).collect();
        let s = SampledSignal::uniform_from(0.0, 1.0, v).unwrap();
        let p = hilbert_phase(&s).unwrap().phase;
        for i in 100..n - 100 {
            assert!((p[i] - p[i - 1] - w).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_is_degenerate() {
        let s = SampledSignal::uniform_from(0.0, 1.0, vec![0.4; 64]).unwrap();
        assert!(matches!(hilbert_phase(&s), Err(Error::Degenerate(_))));
    }

    #[test]
    fn unwrap_removes_jumps() {
        let mut p: Vec<f64> = (0..100).map(|i| ((i as f64 * 0.9) + PI).rem_euclid(2.0 * PI) - PI).collect();
        unwrap_in_place(&mut p);
        for w in p.windows(2) {
            assert!((w[1] - w[0] - 0.9).abs() < 1e-12);
        }
    }
}
