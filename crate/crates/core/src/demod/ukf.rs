//! Unscented Kalman filter on the sweep polynomial `[A, a3, a2, a1]` with
//! measurement `y[n] = A cos(θ0 + a3 (nT)³ + a2 (nT)² + a1 nT) + w`.

use serde::{Deserialize, Serialize};

use super::PhaseEstimate;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

const L: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UkfParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub sigma_a: f64,
    /// Random-walk deviations of `[a3, a2, a1]`.
    pub sigma_coef: [f64; 3],
    pub sigma_w: f64,
    pub x0: [f64; 4],
    pub p0_diag: [f64; 4],
    /// Time per sample in the units the coefficients are expressed in.
    pub sample_period: f64,
    /// Phase at `n = 0`, held fixed.
    pub phase_offset: f64,
}

impl UkfParams {
    /// Defaults `α = 1e-2`, `β = 2`, `κ = 0`, identity prior.
    pub fn new(x0: [f64; 4], sample_period: f64, sigma_w: f64) -> Self {
        UkfParams {
            alpha: 1e-2,
            beta: 2.0,
            kappa: 0.0,
            sigma_a: 1e-4,
            sigma_coef: [1e-3; 3],
            sigma_w,
            x0,
            p0_diag: [1.0; 4],
            sample_period,
            phase_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.beta >= 0.0) || !(self.kappa >= 0.0) {
            return Err(Error::Invalid("beta and kappa must be >= 0".into()));
        }
        if !(self.sample_period > 0.0) {
            return Err(Error::Invalid("sample period must be positive".into()));
        }
        if !(self.sigma_a >= 0.0 && self.sigma_w >= 0.0 && self.sigma_coef.iter().all(|s| *s >= 0.0)) {
            return Err(Error::Invalid("UKF noise deviations must be >= 0".into()));
        }
        if self.p0_diag.iter().any(|v| !(*v > 0.0)) || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("UKF prior must be finite with positive variances".into()));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.alpha * self.alpha * (L as f64 + self.kappa) - L as f64
    }

    pub fn gamma(&self) -> f64 {
        (L as f64 + self.lambda()).sqrt()
    }

    /// Mean and covariance weights of the `2L + 1` sigma points.
    pub fn weights(&self) -> ([f64; 2 * L + 1], [f64; 2 * L + 1]) {
        let lam = self.lambda();
        let wi = 1.0 / (2.0 * (L as f64 + lam));
        let mut wm = [wi; 2 * L + 1];
        let mut wc = [wi; 2 * L + 1];
        wm[0] = lam / (lam + L as f64);
        wc[0] = wm[0] + 1.0 - self.alpha * self.alpha + self.beta;
        (wm, wc)
    }
}

#[inline]
fn poly(a3: f64, a2: f64, a1: f64, t: f64) -> f64 {
    t * (a1 + t * (a2 + t * a3))
}

/// `sin_cos` with Taylor branches for the small sigma-point spreads; the
/// truncation error stays under 1e-20.
#[inline]
fn sin_cos_small(d: f64) -> (f64, f64) {
    if d.abs() < 1e-4 {
        let d2 = d * d;
        (d * (1.0 - d2 / 6.0), 1.0 - d2 / 2.0 * (1.0 - d2 / 12.0))
    } else if d.abs() < 0.05 {
        let d2 = d * d;
        let s = d * (1.0 - d2 / 6.0 * (1.0 - d2 / 20.0 * (1.0 - d2 / 42.0 * (1.0 - d2 / 72.0))));
        let c = 1.0 - d2 / 2.0 * (1.0 - d2 / 12.0 * (1.0 - d2 / 30.0 * (1.0 - d2 / 56.0 * (1.0 - d2 / 90.0))));
        (s, c)
    } else {
        d.sin_cos()
    }
}

/// Lower Cholesky factor of a symmetric 4×4 matrix, `None` if not positive
/// definite. Factors as `U D Uᵀ` first and scales the columns by `√D` at the end.
fn cholesky4(a: &[[f64; L]; L]) -> Option<[[f64; L]; L]> {
    let mut u = [[0.0; L]; L];
    let mut dg = [0.0; L];
    for j in 0..L {
        let mut d = a[j][j];
        for k in 0..j {
            d -= u[j][k] * u[j][k] * dg[k];
        }
        if !(d > 0.0) {
            return None;
        }
        dg[j] = d;
        let inv = 1.0 / d;
        for i in (j + 1)..L {
            let mut s = a[i][j];
            for k in 0..j {
                s -= u[i][k] * u[j][k] * dg[k];
            }
            u[i][j] = s * inv;
        }
    }
    let mut l = [[0.0; L]; L];
    for j in 0..L {
        let r = dg[j].sqrt();
        l[j][j] = r;
        for i in (j + 1)..L {
            l[i][j] = u[i][j] * r;
        }
    }
    Some(l)
}

fn cholesky(p: &[[f64; L]; L], index: usize) -> Result<[[f64; L]; L]> {
    if let Some(c) = cholesky4(p) {
        return Ok(c);
    }
    let mut jittered = *p;
    for (i, row) in jittered.iter_mut().enumerate() {
        row[i] += 1e-12;
    }
    cholesky4(&jittered).ok_or(Error::Cholesky { index })
}

/// Filtered states `[A, a3, a2, a1]` after each sample.
pub fn ukf_run(y: &[f64], p: &UkfParams) -> Result<Vec<[f64; 4]>> {
    p.validate()?;
    let (wm, wc) = p.weights();
    let wi = wm[1];
    let gamma = p.gamma();
    let q = [
        p.sigma_a * p.sigma_a,
        p.sigma_coef[0] * p.sigma_coef[0],
        p.sigma_coef[1] * p.sigma_coef[1],
        p.sigma_coef[2] * p.sigma_coef[2],
    ];
    let r = p.sigma_w * p.sigma_w;
    let mut x = p.x0;
    let mut cov = [[0.0; L]; L];
    for i in 0..L {
        cov[i][i] = p.p0_diag[i];
    }
    let mut out = Vec::with_capacity(y.len());
    let mut ys = [0.0; 2 * L + 1];
    for (n, &yn) in y.iter().enumerate() {
        let t = n as f64 * p.sample_period;
        let s = cholesky(&cov, n)?;
        // Sigma points are x ± γ·(columns of √P). With an identity transition
        // their weighted spread reproduces P exactly, so P⁻ = P + Q.
        let mut pp = cov;
        for i in 0..L {
            pp[i][i] += q[i];
        }
        // h is linear in the coefficients inside the cosine: expand around the mean.
        let phi0 = p.phase_offset + poly(x[1], x[2], x[3], t);
        let (s0, c0) = phi0.sin_cos();
        ys[0] = x[0] * c0;
        let mut col = [[0.0; L]; L];
        for j in 0..L {
            for i in j..L {
                col[j][i] = gamma * s[i][j];
            }
            let d = col[j];
            let (sd, cd) = sin_cos_small(poly(d[1], d[2], d[3], t));
            // cos(φ0 ± δ) = cos φ0 cos δ ∓ sin φ0 sin δ
            ys[1 + j] = (x[0] + d[0]) * (c0 * cd - s0 * sd);
            ys[1 + L + j] = (x[0] - d[0]) * (c0 * cd + s0 * sd);
        }
        // Every point but the centre carries the same weight wi.
        let ymean = wm[0] * ys[0] + wi * ys[1..].iter().sum::<f64>();
        let mut spread = 0.0;
        let mut pxy = [0.0; L];
        for j in 0..L {
            let ep = ys[1 + j] - ymean;
            let em = ys[1 + L + j] - ymean;
            spread += ep * ep + em * em;
            let g = wi * (ep - em);
            for i in 0..L {
                pxy[i] += col[j][i] * g;
            }
        }
        let py = r + wc[0] * (ys[0] - ymean) * (ys[0] - ymean) + wi * spread;
        let innov = yn - ymean;
        let inv_py = 1.0 / py;
        let mut k = [0.0; L];
        for i in 0..L {
            k[i] = pxy[i] * inv_py;
            x[i] += k[i] * innov;
        }
        for i in 0..L {
            for j in 0..=i {
                let v = pp[i][j] - k[i] * k[j] * py;
                cov[i][j] = v;
                cov[j][i] = v;
            }
        }
        if !x.iter().all(|v| v.is_finite()) || !py.is_finite() {
            return Err(Error::Divergence { index: n });
        }
        out.push(x);
    }
    Ok(out)
}

pub fn ukf_estimate(mzi: &SampledSignal, p: &UkfParams) -> Result<PhaseEstimate> {
    mzi.require_uniform()?;
    let states = ukf_run(&mzi.values, p)?;
    let phase = states
        .iter()
        .enumerate()
        .map(|(n, s)| p.phase_offset + poly(s[1], s[2], s[3], n as f64 * p.sample_period))
        .collect();
    let amplitude = states.iter().map(|s| s[0]).collect();
    Ok(PhaseEstimate { phase, amplitude: Some(amplitude), blocks: None })
}
