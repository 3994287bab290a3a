//! Calibration pipelines and A-scan reconstruction.

pub mod interp;
pub mod realtime;
pub mod resample;
pub mod rolloff;
pub mod zero_crossing;

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

pub use interp::{InterpKind, Interpolator};
pub use realtime::{realtime_calibrate, realtime_from_clock};
pub use resample::{anchor_wavenumber, resample_at_clock, resample_calibrate, resample_from_track, uncalibrated, Lookup, ResampleConfig};
pub use rolloff::BlurredModel;
pub use zero_crossing::{zero_crossing_calibrate, ZeroCrossingMode};

use crate::demod::{window_gen, WindowKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub osr: Option<f64>,
    pub interp: Option<InterpKind>,
    pub estimator: Option<String>,
    /// Ladder levels with no sample.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedScan {
    pub k_values: Vec<f64>,
    pub samples: Vec<f64>,
    pub method: String,
    pub meta: ScanMeta,
}

impl CalibratedScan {
    pub fn new(k_values: Vec<f64>, samples: Vec<f64>, method: impl Into<String>) -> Result<Self> {
        if k_values.len() != samples.len() {
            return Err(Error::Contract(format!("{} wavenumbers but {} samples", k_values.len(), samples.len())));
        }
        Ok(CalibratedScan { k_values, samples, method: method.into(), meta: ScanMeta::default() })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean spacing of the wavenumber grid.
    pub fn spacing(&self) -> f64 {
        let n = self.k_values.len();
        if n < 2 {
            return 0.0;
        }
        (self.k_values[n - 1] - self.k_values[0]) / (n - 1) as f64
    }

    /// Largest deviation of a step from the mean spacing, relative to it.
    pub fn spacing_error(&self) -> f64 {
        let dk = self.spacing();
        self.k_values
            .windows(2)
            .map(|w| ((w[1] - w[0]) - dk).abs() / dk.abs())
            .fold(0.0, f64::max)
    }

    /// Keeps only the samples whose wavenumber also appears in `keys`.
    pub fn restrict_to(&self, keys: &[f64]) -> CalibratedScan {
        let mut out = CalibratedScan { k_values: Vec::new(), samples: Vec::new(), method: self.method.clone(), meta: self.meta.clone() };
        let mut j = 0;
        for (k, v) in self.k_values.iter().zip(&self.samples) {
            while j < keys.len() && keys[j] < *k {
                j += 1;
            }
            if j < keys.len() && keys[j] == *k {
                out.k_values.push(*k);
                out.samples.push(*v);
            }
        }
        out
    }
}

/// Samples minus a reference-arm-only scan on the same wavenumbers.
pub fn dc_subtract(scan: &CalibratedScan, reference: &CalibratedScan) -> Result<CalibratedScan> {
    if scan.len() != reference.len() {
        return Err(Error::Contract(format!("scan has {} samples, reference {}", scan.len(), reference.len())));
    }
    let dk = scan.spacing().abs().max(f64::MIN_POSITIVE);
    for (a, b) in scan.k_values.iter().zip(&reference.k_values) {
        if (a - b).abs() > 1e-9 * dk {
            return Err(Error::Contract(format!("wavenumber grids differ at {a} vs {b}")));
        }
    }
    let samples = scan.samples.iter().zip(&reference.samples).map(|(a, b)| a - b).collect();
    Ok(CalibratedScan { k_values: scan.k_values.clone(), samples, method: scan.method.clone(), meta: scan.meta.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AScan {
    /// Metres, `z_j = jπ/(δk·N)` for `j ≤ N/2`.
    pub depth: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl AScan {
    pub fn bin_width(&self) -> f64 {
        if self.depth.len() < 2 {
            0.0
        } else {
            self.depth[1] - self.depth[0]
        }
    }

    /// Index and value of the largest magnitude at or beyond `min_depth`.
    pub fn peak_from(&self, min_depth: f64) -> Option<(usize, f64)> {
        self.depth
            .iter()
            .zip(&self.magnitude)
            .enumerate()
            .filter(|(_, (z, _))| **z >= min_depth)
            .map(|(i, (_, m))| (i, *m))
            .fold(None, |best: Option<(usize, f64)>, (i, m)| match best {
                Some((_, bm)) if bm >= m => best,
                _ => Some((i, m)),
            })
    }
}

/// Relative spacing error tolerated by [`reconstruct_ascan`].
pub const SPACING_TOL: f64 = 1e-6;

/// Magnitude of the transform over wavenumber, zero-padded to `fft_len`,
/// scaled so a unit-amplitude fringe peaks at one.
pub fn reconstruct_ascan(scan: &CalibratedScan, fft_len: usize, window: Option<WindowKind>) -> Result<AScan> {
    let n = scan.len();
    if n < 2 {
        return Err(Error::Invalid("A-scan needs at least two samples".into()));
    }
    if fft_len < n {
        return Err(Error::Invalid(format!("fft length {fft_len} shorter than the scan ({n})")));
    }
    let err = scan.spacing_error();
    if err > SPACING_TOL {
        return Err(Error::Contract(format!("wavenumbers are not equidistant (relative error {err:e})")));
    }
    let dk = scan.spacing();
    let w = match window {
        Some(kind) if n >= 8 => window_gen(kind, n)?,
        _ => vec![1.0; n],
    };
    let wsum: f64 = w.iter().sum();
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); fft_len];
    for ((b, &x), &wi) in buf.iter_mut().zip(&scan.samples).zip(&w) {
        *b = Complex64::new(x * wi, 0.0);
    }
    FftPlanner::new().plan_fft_forward(fft_len).process(&mut buf);
    let half = fft_len / 2;
    let depth = (0..=half).map(|j| j as f64 * PI / (dk * fft_len as f64)).collect();
    let magnitude = buf[..=half].iter().map(|c| 2.0 * c.norm() / wsum).collect();
    Ok(AScan { depth, magnitude })
}
