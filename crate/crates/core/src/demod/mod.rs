//! Instantaneous-phase estimators for the calibrating signal.

pub mod ekf;
pub mod envelope;
pub mod hilbert;
pub mod ipdft;
pub mod ops;
pub mod splitradix;
pub mod ukf;
pub mod window;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use ekf::{ekf_estimate, EkfParams};
pub use envelope::{envelope_equalize, envelope_phase};
pub use hilbert::hilbert_phase;
pub use ipdft::{ipdft_estimate, BlockEstimate, IpdftMethod, IpdftParams};
pub use ops::{count_ops, OpCounts, OpsMethod};
pub use ukf::{ukf_estimate, UkfParams};
pub use window::{window_gen, WindowKind};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimate {
    /// Unwrapped MZI phase per sample (rad).
    pub phase: Vec<f64>,
    pub amplitude: Option<Vec<f64>>,
    pub blocks: Option<Vec<BlockEstimate>>,
}

impl PhaseEstimate {
    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }
}

/// Cubic phase law `θ0 + a1 τ + a2 τ² + a3 τ³` in normalized time `τ = n / len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub amplitude: f64,
    pub theta0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub len: usize,
}

impl SweepFit {
    pub fn phase(&self, n: f64) -> f64 {
        let tau = n / self.len as f64;
        self.theta0 + tau * (self.a1 + tau * (self.a2 + tau * self.a3))
    }

    /// `[A, φ, φ', φ'', φ''']` at `n = −1` in per-sample units, so that the
    /// first prediction lands on sample 0.
    pub fn ekf_x0(&self) -> [f64; 5] {
        let t = 1.0 / self.len as f64;
        let (b1, b2, b3) = (self.a1 * t, self.a2 * t * t, self.a3 * t * t * t);
        [self.amplitude, self.phase(-1.0), b1 - 2.0 * b2 + 3.0 * b3, 2.0 * b2 - 6.0 * b3, 6.0 * b3]
    }

    /// `[A, a3, a2, a1]` for a filter running on `τ`.
    pub fn ukf_x0(&self) -> [f64; 4] {
        [self.amplitude, self.a3, self.a2, self.a1]
    }
}

/// Rough cubic fit of the MZI phase from blockwise RVCI frequencies, used to
/// seed the Kalman filters.
pub fn coarse_sweep_fit(mzi: &SampledSignal) -> Result<SweepFit> {
    mzi.require_uniform()?;
    let len = mzi.len();
    let mut block = 64usize;
    while block > 16 && len / block < 8 {
        block /= 2;
    }
    let nb = len / block;
    if nb < 4 {
        return Err(Error::Invalid(format!("{len} samples are too few for a sweep fit")));
    }
    let mut est = ipdft::Ipdft::new(IpdftParams::rvci(block, 1))?;
    // Normal equations for ω·len = a1 + 2a2 τ + 3a3 τ².
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let mut used = 0;
    for b in 0..nb {
        let x = &mzi.values[b * block..(b + 1) * block];
        let Ok((omega, _)) = est.block(x, b) else { continue };
        let tau = (b * block) as f64 / len as f64 + (block as f64 - 1.0) / (2.0 * len as f64);
        let row = Vector3::new(1.0, 2.0 * tau, 3.0 * tau * tau);
        ata += row * row.transpose();
        atb += row * (omega * len as f64);
        used += 1;
    }
    if used < 4 {
        return Err(Error::Degenerate(format!("only {used} usable blocks for the sweep fit")));
    }
    let coef = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::Degenerate("singular sweep-fit system".into()))?;
    let mut fit = SweepFit { amplitude: 1.0, theta0: 0.0, a1: coef[0], a2: coef[1], a3: coef[2], len };
    for _ in 0..2 {
        refine(&mut fit, &mzi.values, block)?;
    }
    Ok(fit)
}

/// One Gauss-Newton style pass: blockwise residual phases of the signal
/// against the current law, unwrapped and fitted by a weighted cubic.
fn refine(fit: &mut SweepFit, values: &[f64], block: usize) -> Result<()> {
    let len = values.len();
    let nb = len / block;
    // Hann weighting keeps the negative-frequency image out of the residual.
    let w = window_gen(WindowKind::Hann, block)?;
    let mut resid = Vec::with_capacity(nb);
    let mut total = Complex64::new(0.0, 0.0);
    for b in 0..nb {
        let c: Complex64 = (0..block)
            .map(|i| {
                let n = b * block + i;
                Complex64::from_polar(w[i] * values[n], -fit.phase(n as f64))
            })
            .sum();
        total += c;
        let tau = (b * block) as f64 / len as f64 + (block as f64 - 1.0) / (2.0 * len as f64);
        resid.push((tau, c.arg(), c.norm()));
    }
    let mut prev = resid[0].1;
    for r in resid.iter_mut().skip(1) {
        r.1 = prev + (r.1 - prev + PI).rem_euclid(2.0 * PI) - PI;
        prev = r.1;
    }
    let mut ata = Matrix4::zeros();
    let mut atb = Vector4::zeros();
    for &(tau, ph, w) in &resid {
        let row = Vector4::new(1.0, tau, tau * tau, tau * tau * tau);
        ata += row * row.transpose() * w;
        atb += row * (ph * w);
    }
    let d = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::Degenerate("singular sweep refinement".into()))?;
    fit.theta0 += d[0];
    fit.a1 += d[1];
    fit.a2 += d[2];
    fit.a3 += d[3];
    fit.amplitude = 4.0 * total.norm() / (nb * block) as f64;
    Ok(())
}

/// Estimator selection, with filter settings derived from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Estimator {
    Hilbert,
    Envelope { m_c: usize },
    Ekf,
    Ukf,
    Ipdft(IpdftParams),
}

/// EKF settings that track a sweep seeded by [`coarse_sweep_fit`].
pub const EKF_SIGMA_NA: f64 = 1e-4;
pub const EKF_SIGMA_NK: f64 = 1e-10;
pub const EKF_P0: [f64; 5] = [1e-2, 1e-2, 1e-6, 1e-10, 1e-14];

pub fn ekf_params_for(fit: &SweepFit, sigma_w: f64) -> EkfParams {
    EkfParams {
        sigma_na: EKF_SIGMA_NA,
        sigma_nk: EKF_SIGMA_NK,
        sigma_w: sigma_w.max(1e-3 * fit.amplitude),
        x0: fit.ekf_x0(),
        p0_diag: EKF_P0,
    }
}

pub fn ukf_params_for(fit: &SweepFit, sigma_w: f64) -> UkfParams {
    let mut p = UkfParams::new(fit.ukf_x0(), 1.0 / fit.len as f64, sigma_w.max(1e-3 * fit.amplitude));
    p.phase_offset = fit.theta0;
    p
}

impl Estimator {
    pub fn name(&self) -> String {
        match self {
            Estimator::Hilbert => "hilbert".into(),
            Estimator::Envelope { .. } => "envelope".into(),
            Estimator::Ekf => "ekf".into(),
            Estimator::Ukf => "ukf".into(),
            Estimator::Ipdft(p) => match p.method {
                IpdftMethod::By2 => "ipdft-by2".into(),
                IpdftMethod::Rvci => format!("ipdft-rvci{}", p.order()),
            },
        }
    }

    /// `sigma_w` is the assumed measurement noise; the Kalman filters floor
    /// it at 1e-3 of the signal amplitude.
    pub fn estimate(&self, mzi: &SampledSignal, sigma_w: f64) -> Result<PhaseEstimate> {
        match *self {
            Estimator::Hilbert => hilbert_phase(mzi),
            Estimator::Envelope { m_c } => envelope_phase(mzi, m_c),
            Estimator::Ekf => ekf_estimate(mzi, &ekf_params_for(&coarse_sweep_fit(mzi)?, sigma_w)),
            Estimator::Ukf => ukf_estimate(mzi, &ukf_params_for(&coarse_sweep_fit(mzi)?, sigma_w)),
            Estimator::Ipdft(p) => ipdft_estimate(mzi, &p),
        }
    }
}
