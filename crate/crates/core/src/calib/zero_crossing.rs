//! Calibration on the zero crossings of the MZI, optionally doubled with the
//! crossings of its quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::interp::{InterpKind, Interpolator};
use super::CalibratedScan;
use crate::demod::hilbert::analytic_signal;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroCrossingMode {
    Basic,
    Quadrature,
}

/// Sub-sample sign changes of `x`, by linear interpolation.
pub fn sign_changes(times: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..x.len().saturating_sub(1) {
        let (a, b) = (x[i], x[i + 1]);
        if a == 0.0 {
            if i == 0 || x[i - 1] != 0.0 {
                out.push(times[i]);
            }
        } else if a * b < 0.0 {
            out.push(times[i] + a / (a - b) * (times[i + 1] - times[i]));
        }
    }
    out
}

/// Samples the interferogram at every MZI zero crossing (every quarter
/// fringe in quadrature mode). Wavenumbers step by `π/dl` (`π/(2dl)`) from
/// `k_first`, the wavenumber assigned to the first crossing.
pub fn zero_crossing_calibrate(
    mzi: &SampledSignal,
    interf: &SampledSignal,
    mode: ZeroCrossingMode,
    dl: f64,
    k_first: f64,
) -> Result<CalibratedScan> {
    mzi.require_uniform()?;
    if !(dl > 0.0) {
        return Err(Error::Invalid(format!("path difference must be positive, got {dl}")));
    }
    let mut events = sign_changes(&mzi.times, &mzi.values);
    let step = match mode {
        ZeroCrossingMode::Basic => PI / dl,
        ZeroCrossingMode::Quadrature => {
            let q: Vec<f64> = analytic_signal(&mzi.values).iter().map(|c| c.im).collect();
            events.extend(sign_changes(&mzi.times, &q));
            events.sort_by(|a, b| a.total_cmp(b));
            PI / (2.0 * dl)
        }
    };
    if events.len() < 8 {
        return Err(Error::Degenerate(format!("only {} zero crossings", events.len())));
    }
    let it = Interpolator::new(interf, InterpKind::Linear)?;
    let mut k_values = Vec::with_capacity(events.len());
    let mut samples = Vec::with_capacity(events.len());
    let mut skipped = 0;
    for (i, t) in events.iter().enumerate() {
        match it.eval(*t) {
            Some(v) => {
                k_values.push(k_first + i as f64 * step);
                samples.push(v);
            }
            None => skipped += 1,
        }
    }
    let name = match mode {
        ZeroCrossingMode::Basic => "zero-crossing",
        ZeroCrossingMode::Quadrature => "zero-crossing-quad",
    };
    let mut scan = CalibratedScan::new(k_values, samples, name)?;
    scan.meta.skipped = skipped;
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep_model::max_depth;

    fn tone(cycles: f64, n: usize) -> SampledSignal {
        let v = (0..n).map(|i| (2.0 * PI * cycles * i as f64 / n as f64 + 0.3).cos()).collect();
        SampledSignal::uniform_from(0.0, 1.0, v).unwrap()
    }

    #[test]
    fn crossings_per_cycle() {
        let m = tone(50.0, 2000);
        let b = zero_crossing_calibrate(&m, &m, ZeroCrossingMode::Basic, 1e-3, 0.0).unwrap();
        let q = zero_crossing_calibrate(&m, &m, ZeroCrossingMode::Quadrature, 1e-3, 0.0).unwrap();
        assert!((b.len() as i64 - 100).abs() <= 2);
        assert!((q.len() as i64 - 200).abs() <= 4);
    }

    #[test]
    fn spacing_and_depth() {
        let m = tone(50.0, 2000);
        let b = zero_crossing_calibrate(&m, &m, ZeroCrossingMode::Basic, 1e-3, 0.0).unwrap();
        let q = zero_crossing_calibrate(&m, &m, ZeroCrossingMode::Quadrature, 1e-3, 0.0).unwrap();
        assert!((b.spacing() - PI * 1e3).abs() < 1e-9);
        let zb = max_depth(b.spacing()).unwrap();
        let zq = max_depth(q.spacing()).unwrap();
        assert!((zq / zb - 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_crossings() {
        let m = tone(2.0, 200);
        assert!(matches!(
            zero_crossing_calibrate(&m, &m, ZeroCrossingMode::Basic, 1e-3, 0.0),
            Err(Error::Degenerate(_))
        ));
    }
}
