//! Extended Kalman filter on the state `[A, φ, φ', φ'', φ''']` (per-sample
//! derivatives) with measurement `y = A cos φ + w`.

use nalgebra::{Matrix5, RowVector5, Vector5};
use serde::{Deserialize, Serialize};

use super::PhaseEstimate;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkfParams {
    pub sigma_na: f64,
    pub sigma_nk: f64,
    pub sigma_w: f64,
    pub x0: [f64; 5],
    /// Diagonal of the initial covariance.
    pub p0_diag: [f64; 5],
}

impl EkfParams {
    pub fn new(sigma_na: f64, sigma_nk: f64, sigma_w: f64, x0: [f64; 5]) -> Result<Self> {
        let p = EkfParams { sigma_na, sigma_nk, sigma_w, x0, p0_diag: [1.0; 5] };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_na >= 0.0 && self.sigma_nk >= 0.0 && self.sigma_w >= 0.0) {
            return Err(Error::Invalid("EKF noise deviations must be >= 0".into()));
        }
        if self.p0_diag.iter().any(|v| !(*v > 0.0)) || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("EKF prior must be finite with positive variances".into()));
        }
        Ok(())
    }
}

/// Taylor transition for a phase with constant third derivative.
pub fn transition() -> Matrix5<f64> {
    Matrix5::new(
        1.0, 0.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 1.0, 0.5, 1.0 / 6.0, //
        0.0, 0.0, 1.0, 1.0, 0.5, //
        0.0, 0.0, 0.0, 1.0, 1.0, //
        0.0, 0.0, 0.0, 0.0, 1.0,
    )
}

/// Process noise: `σ_nA²` on the amplitude and `σ_nk²` times the Pascal
/// pattern on the phase block.
pub fn process_noise(sigma_na: f64, sigma_nk: f64) -> Matrix5<f64> {
    let pascal = [[1.0, 1.0, 1.0, 1.0], [1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 6.0, 10.0], [1.0, 4.0, 10.0, 20.0]];
    let mut v = Matrix5::zeros();
    v[(0, 0)] = sigma_na * sigma_na;
    for i in 0..4 {
        for j in 0..4 {
            v[(i + 1, j + 1)] = sigma_nk * sigma_nk * pascal[i][j];
        }
    }
    v
}

/// Runs the filter, handing every posterior covariance to `inspect`.
pub fn ekf_run<F>(y: &[f64], p: &EkfParams, mut inspect: F) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(usize, &Matrix5<f64>),
{
    p.validate()?;
    let f = transition();
    let ft = f.transpose();
    let v = process_noise(p.sigma_na, p.sigma_nk);
    let r = p.sigma_w * p.sigma_w;
    let mut x = Vector5::from_column_slice(&p.x0);
    let mut cov = Matrix5::from_diagonal(&Vector5::from_column_slice(&p.p0_diag));
    let mut amp = Vec::with_capacity(y.len());
    let mut phase = Vec::with_capacity(y.len());
    for (n, &yn) in y.iter().enumerate() {
        let xp = f * x;
        let pp = f * cov * ft + v;
        let (s, c) = xp[1].sin_cos();
        let h = RowVector5::new(c, -xp[0] * s, 0.0, 0.0, 0.0);
        let pht = pp * h.transpose();
        let innov_var = (h * pht)[0] + r;
        let k = pht / innov_var;
        x = xp + k * (yn - xp[0] * c);
        cov = (Matrix5::identity() - k * h) * pp;
        cov = 0.5 * (cov + cov.transpose());
        if !x.iter().all(|v| v.is_finite()) || !innov_var.is_finite() {
            return Err(Error::Divergence { index: n });
        }
        inspect(n, &cov);
        amp.push(x[0]);
        phase.push(x[1]);
    }
    Ok((amp, phase))
}

pub fn ekf_estimate(mzi: &SampledSignal, p: &EkfParams) -> Result<PhaseEstimate> {
    mzi.require_uniform()?;
    let (amp, phase) = ekf_run(&mzi.values, p, |_, _| {})?;
    Ok(PhaseEstimate { phase, amplitude: Some(amp), blocks: None })
}
