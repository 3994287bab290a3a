//! Blockwise interpolated-DFT frequency estimation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::splitradix::{NoCount, SplitRadix};
use super::window::{window_gen, WindowKind};
use super::PhaseEstimate;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpdftMethod {
    By2,
    Rvci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpdftParams {
    pub block_len: usize,
    pub window: WindowKind,
    pub method: IpdftMethod,
}

impl IpdftParams {
    pub fn by2(block_len: usize) -> Self {
        IpdftParams { block_len, window: WindowKind::Rectangular, method: IpdftMethod::By2 }
    }

    pub fn rvci(block_len: usize, order: u32) -> Self {
        IpdftParams { block_len, window: WindowKind::Rvci(order), method: IpdftMethod::Rvci }
    }

    pub fn order(&self) -> u32 {
        match self.window {
            WindowKind::Rvci(o) => o,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_len < 8 || !self.block_len.is_power_of_two() {
            return Err(Error::Invalid(format!("block length must be a power of two >= 8, got {}", self.block_len)));
        }
        match (self.method, self.window) {
            (IpdftMethod::By2, WindowKind::Rectangular) => Ok(()),
            (IpdftMethod::By2, w) => Err(Error::Invalid(format!("BY-2 needs the rectangular window, got {w:?}"))),
            (IpdftMethod::Rvci, WindowKind::Rvci(o)) if o >= 1 => Ok(()),
            (IpdftMethod::Rvci, w) => Err(Error::Invalid(format!("RVCI needs an RVCI window of order >= 1, got {w:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    pub start: usize,
    /// rad/sample
    pub omega0: f64,
    /// Decay per sample.
    pub d: f64,
    /// False when the block hit an edge bin or a degenerate ratio; its
    /// frequency is then interpolated from the usable neighbours.
    pub usable: bool,
}

/// Reusable per-block machinery.
pub struct Ipdft {
    params: IpdftParams,
    plan: SplitRadix,
    window: Vec<f64>,
    centroid: f64,
    buf: Vec<Complex64>,
    spec: Vec<Complex64>,
}

impl Ipdft {
    pub fn new(params: IpdftParams) -> Result<Self> {
        params.validate()?;
        let p = params.block_len;
        let window = window_gen(params.window, p)?;
        let sw: f64 = window.iter().sum();
        let centroid = window.iter().enumerate().map(|(n, w)| n as f64 * w).sum::<f64>() / sw;
        Ok(Ipdft {
            params,
            plan: SplitRadix::new(p)?,
            window,
            centroid,
            buf: vec![Complex64::new(0.0, 0.0); p],
            spec: vec![Complex64::new(0.0, 0.0); p],
        })
    }

    /// `(ω0, d)` of the dominant component of one block.
    pub fn block(&mut self, x: &[f64], block_index: usize) -> Result<(f64, f64)> {
        let p = self.params.block_len;
        assert_eq!(x.len(), p);
        for ((b, &v), &w) in self.buf.iter_mut().zip(x).zip(&self.window) {
            *b = Complex64::new(v * w, 0.0);
        }
        self.plan.process(&self.buf, &mut self.spec, &mut NoCount);
        let y = &self.spec;
        let mut kmax = 0;
        let mut best = -1.0;
        for (k, v) in y.iter().enumerate().take(p / 2) {
            let m = v.norm_sqr();
            if m > best {
                best = m;
                kmax = k;
            }
        }
        if kmax <= 1 || kmax >= p / 2 - 1 {
            return Err(Error::EdgeBin { block: block_index, bin: kmax });
        }
        match self.params.method {
            IpdftMethod::By2 => by2(y, kmax, p),
            IpdftMethod::Rvci => rvci(y, kmax, p, self.params.order()),
        }
    }

    /// Phase of a real tone of frequency `omega` at the window centroid. The
    /// correlation with `e^{−jωm}` also picks up the negative-frequency image;
    /// both terms are solved for together.
    fn tone_phase(&self, x: &[f64], omega: f64) -> f64 {
        let centre = self.centroid();
        let step = Complex64::from_polar(1.0, -omega);
        let mut rot = Complex64::from_polar(1.0, omega * centre);
        let (mut c, mut s2, mut s0) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
        for (&v, &w) in x.iter().zip(&self.window) {
            c += rot * (v * w);
            s2 += rot * rot * w;
            s0 += w;
            rot *= step;
        }
        // c = z·s0 + z̄·s2 with z = (A/2)e^{jφ}
        (c * s0 - c.conj() * s2).arg()
    }

    fn centroid(&self) -> f64 {
        self.centroid
    }

    /// Window-weighted mean of `(n − centroid)²`.
    fn second_moment(&self) -> f64 {
        let c = self.centroid();
        let sw: f64 = self.window.iter().sum();
        self.window.iter().enumerate().map(|(n, w)| w * (n as f64 - c).powi(2)).sum::<f64>() / sw
    }
}

const TINY: f64 = 1e-300;

fn by2(y: &[Complex64], k: usize, p: usize) -> Result<(f64, f64)> {
    // The tone lies between kb − 1 and kb.
    let kb = if y[k - 1].norm_sqr() > y[k + 1].norm_sqr() { k } else { k + 1 };
    let z = |i: usize| y[i - 1] - 2.0 * y[i] + y[i + 1];
    let num = z(kb - 1);
    let den = z(kb);
    if den.norm() < TINY {
        return Err(Error::Degenerate(format!("second difference vanishes at bin {kb}")));
    }
    let r = num / den;
    // For x[n] = λⁿ the rectangular DFT is ∝ 1/(1 − u_k), u_k = λ e^{−jω_k}.
    // The ratio of second differences then satisfies
    //   q(1 − Rq)u² + (1 − q²)(1 + R)u + (R − q) = 0,   q = e^{j2π/P},
    // with u = u_kb.
    let q = Complex64::from_polar(1.0, 2.0 * PI / p as f64);
    let a = q * (1.0 - r * q);
    let b = (1.0 - q * q) * (1.0 + r);
    let c = r - q;
    let u = if a.norm() < TINY {
        if b.norm() < TINY {
            return Err(Error::Degenerate("BY-2 pole equation is degenerate".into()));
        }
        -c / b
    } else {
        let disc = (b * b - 4.0 * a * c).sqrt();
        let r1 = (-b + disc) / (2.0 * a);
        let r2 = (-b - disc) / (2.0 * a);
        if r1.arg().abs() <= r2.arg().abs() {
            r1
        } else {
            r2
        }
    };
    let pole = u * Complex64::from_polar(1.0, 2.0 * PI * kb as f64 / p as f64);
    Ok((pole.arg(), -pole.norm().ln()))
}

fn rvci(y: &[Complex64], k: usize, p: usize, order: u32) -> Result<(f64, f64)> {
    let o = order as f64;
    let yk = y[k].norm_sqr();
    if yk < TINY {
        return Err(Error::Degenerate("empty spectrum".into()));
    }
    let r1 = y[k + 1].norm_sqr() / yk;
    let r2 = y[k - 1].norm_sqr() / yk;
    let den = 2.0 * (o + 1.0) * r1 * r2 - r1 - r2 - 2.0 * o;
    if den.abs() < TINY {
        return Err(Error::Degenerate(format!("RVCI ratio denominator vanishes at bin {k}")));
    }
    let delta = -(2.0 * o + 1.0) / 2.0 * (r1 - r2) / den;
    let radicand = if delta > 0.0 {
        ((delta + o).powi(2) - r1 * (delta - o - 1.0).powi(2)) / (r1 - 1.0)
    } else {
        ((delta - o).powi(2) - r2 * (delta + o + 1.0).powi(2)) / (r2 - 1.0)
    };
    let d = 2.0 * PI / p as f64 * radicand.max(0.0).sqrt();
    Ok(((k as f64 + delta) * 2.0 * PI / p as f64, d))
}

/// Per-block frequencies and phases; the phase between block centres is the
/// cubic matching both ends' phase and frequency.
pub fn ipdft_estimate(mzi: &SampledSignal, params: &IpdftParams) -> Result<PhaseEstimate> {
    mzi.require_uniform()?;
    let mut est = Ipdft::new(*params)?;
    let p = params.block_len;
    let nb = mzi.len() / p;
    if nb == 0 {
        return Err(Error::Invalid(format!("signal shorter than one block of {p}")));
    }
    if mzi.len() % p != 0 {
        log::warn!("dropping {} trailing samples that do not fill a block", mzi.len() % p);
    }
    let mut blocks = Vec::with_capacity(nb);
    let mut first_err = None;
    for b in 0..nb {
        match est.block(&mzi.values[b * p..(b + 1) * p], b) {
            Ok((omega0, d)) => blocks.push(BlockEstimate { start: b * p, omega0, d, usable: true }),
            Err(e @ (Error::EdgeBin { .. } | Error::Degenerate(_))) => {
                first_err.get_or_insert(e);
                blocks.push(BlockEstimate { start: b * p, omega0: f64::NAN, d: f64::NAN, usable: false });
            }
            Err(e) => return Err(e),
        }
    }
    let good: Vec<usize> = (0..nb).filter(|&b| blocks[b].usable).collect();
    if good.is_empty() {
        return Err(first_err.expect("an unusable block recorded its error"));
    }
    if good.len() < nb {
        log::debug!("{} of {nb} IpDFT blocks unusable, interpolated", nb - good.len());
        for b in 0..nb {
            if blocks[b].usable {
                continue;
            }
            let next = good.iter().position(|&g| g > b);
            let (w, d) = match next {
                Some(0) => (blocks[good[0]].omega0, blocks[good[0]].d),
                None => {
                    let g = good[good.len() - 1];
                    (blocks[g].omega0, blocks[g].d)
                }
                Some(j) => {
                    let (lo, hi) = (good[j - 1], good[j]);
                    let f = (b - lo) as f64 / (hi - lo) as f64;
                    (
                        blocks[lo].omega0 + f * (blocks[hi].omega0 - blocks[lo].omega0),
                        blocks[lo].d + f * (blocks[hi].d - blocks[lo].d),
                    )
                }
            };
            blocks[b].omega0 = w;
            blocks[b].d = d;
        }
    }
    // Block phases at the window centroids, less the chirp bias ½ω'⟨m²⟩.
    let centre = est.centroid();
    let m2 = est.second_moment();
    let slope = |b: usize| -> f64 {
        let (lo, hi) = (b.saturating_sub(1), (b + 1).min(nb - 1));
        if hi == lo {
            0.0
        } else {
            (blocks[hi].omega0 - blocks[lo].omega0) / ((hi - lo) * p) as f64
        }
    };
    let mut knots: Vec<(f64, f64, f64)> = Vec::with_capacity(good.len());
    for &b in &good {
        let w = blocks[b].omega0;
        let t = (b * p) as f64 + centre;
        let psi = est.tone_phase(&mzi.values[b * p..(b + 1) * p], w) - 0.5 * slope(b) * m2;
        let phi = match knots.last() {
            None => psi,
            Some(&(t0, phi0, w0)) => {
                let predicted = phi0 + 0.5 * (w0 + w) * (t - t0);
                psi + 2.0 * PI * ((predicted - psi) / (2.0 * PI)).round()
            }
        };
        knots.push((t, phi, w));
    }
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    let mut seg = 0;
    let phase = (0..nb * p)
        .map(|n| {
            let t = n as f64;
            if t <= first.0 {
                return first.1 + first.2 * (t - first.0);
            }
            if t >= last.0 {
                return last.1 + last.2 * (t - last.0);
            }
            while knots[seg + 1].0 < t {
                seg += 1;
            }
            hermite(knots[seg], knots[seg + 1], t)
        })
        .collect();
    Ok(PhaseEstimate { phase, amplitude: None, blocks: Some(blocks) })
}

/// Cubic through `(t, φ, φ')` at both ends.
fn hermite(a: (f64, f64, f64), b: (f64, f64, f64), t: f64) -> f64 {
    let h = b.0 - a.0;
    let s = (t - a.0) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * a.1
        + (s3 - 2.0 * s2 + s) * h * a.2
        + (-2.0 * s3 + 3.0 * s2) * b.1
        + (s3 - s2) * h * b.2
}
