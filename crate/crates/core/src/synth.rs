//! Calibrating (MZI) and sample-arm (Michelson) waveforms, noise and ADC
//! quantization.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::signal::{Grid, SampledSignal};
use crate::sweep_model::{MziGeometry, ReflectivityProfile, SourceSpectrum, SweepProfile};

/// Stream ids so the two detectors never share noise.
pub const STREAM_MZI: u64 = 1;
pub const STREAM_INTERF: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_w: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel { sigma_w: 0.0, seed: 0 }
    }

    pub fn new(sigma_w: f64, seed: u64) -> Result<Self> {
        if !(sigma_w >= 0.0) {
            return Err(Error::Invalid(format!("sigma_w must be >= 0, got {sigma_w}")));
        }
        Ok(NoiseModel { sigma_w, seed })
    }

    /// Noise std giving `snr_db` against a signal of mean power `power`.
    pub fn sigma_for_snr(power: f64, snr_db: f64) -> f64 {
        (power / 10f64.powf(snr_db / 10.0)).sqrt()
    }

    /// Adds `σ_w·N(0,1)` drawn from `(seed, stream)`.
    pub fn add(&self, values: &mut [f64], stream: u64) {
        if self.sigma_w == 0.0 {
            return;
        }
        let mut r = rng::stream(self.seed, stream);
        for v in values.iter_mut() {
            let w: f64 = r.sample(StandardNormal);
            *v += self.sigma_w * w;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcModel {
    pub bits: u32,
    pub full_scale: f64,
    pub rate: f64,
}

impl AdcModel {
    pub fn new(bits: u32, full_scale: f64, rate: f64) -> Result<Self> {
        if !(1..=24).contains(&bits) || !(full_scale > 0.0) || !(rate > 0.0) {
            return Err(Error::Invalid(format!(
                "ADC needs 1 <= Q <= 24, U > 0, f_s > 0; got Q={bits}, U={full_scale}, f_s={rate}"
            )));
        }
        Ok(AdcModel { bits, full_scale, rate })
    }

    pub fn lsb(&self) -> f64 {
        self.full_scale / (1u64 << self.bits) as f64
    }

    /// Mid-rise quantization; returns the level and whether the input clipped.
    #[inline]
    pub fn quantize_value(&self, x: f64) -> (f64, bool) {
        let levels = (1u64 << self.bits) as f64;
        let lsb = self.full_scale / levels;
        let idx = ((x + 0.5 * self.full_scale) / lsb).floor();
        let clipped = idx < 0.0 || idx > levels - 1.0;
        let idx = idx.clamp(0.0, levels - 1.0);
        (-0.5 * self.full_scale + (idx + 0.5) * lsb, clipped)
    }

    /// Quantization noise power `U² 2^(−2Q) / 12`.
    pub fn noise_floor(&self) -> f64 {
        self.lsb() * self.lsb() / 12.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub signal: SampledSignal,
    pub clipped: usize,
}

pub fn quantize(sig: &SampledSignal, adc: &AdcModel) -> Quantized {
    let mut clipped = 0;
    let values = sig
        .values
        .iter()
        .map(|&x| {
            let (q, c) = adc.quantize_value(x);
            clipped += c as usize;
            q
        })
        .collect();
    if clipped > 0 {
        log::warn!("{clipped} samples clipped by the {}-bit quantizer", adc.bits);
    }
    Quantized { signal: sig.with_values(values), clipped }
}

pub fn perturb_depth(z_nominal: f64, amp: f64, omega_z: f64, t: f64) -> f64 {
    z_nominal + amp * (omega_z * t).sin()
}

/// Sinusoidal axial motion applied to every sample reflector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthPerturbation {
    pub amp: f64,
    pub omega: f64,
    /// Absolute time of the sweep start on the perturbation clock.
    pub t_start: f64,
}

fn check_grid(profile: &SweepProfile, grid: &Grid) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("empty time grid".into()));
    }
    let (a, b) = (grid.times[0], grid.times[grid.len() - 1]);
    if a < 0.0 || b > profile.t_scan {
        let bad = if a < 0.0 { a } else { b };
        return Err(Error::Domain { what: "grid time", value: bad, lo: 0.0, hi: profile.t_scan });
    }
    Ok(())
}

/// Noise-free MZI value at time `t`.
#[inline]
pub fn mzi_value(profile: &SweepProfile, geom: &MziGeometry, spec: &SourceSpectrum, t: f64) -> f64 {
    let k = profile.eval_unchecked(t);
    geom.c_amp * spec.shape(k) * (geom.dl * k).cos()
}

/// `C·S(k(t))·cos(dl·k(t)) + W`.
pub fn synth_mzi(
    profile: &SweepProfile,
    geom: &MziGeometry,
    spec: &SourceSpectrum,
    grid: &Grid,
    noise: &NoiseModel,
) -> Result<SampledSignal> {
    check_grid(profile, grid)?;
    let mut values: Vec<f64> = grid.times.iter().map(|&t| mzi_value(profile, geom, spec, t)).collect();
    noise.add(&mut values, STREAM_MZI);
    SampledSignal::new(grid, values)
}

/// Anything that yields the detector intensity at wavenumber `k` and sweep time `t`.
pub trait SpectralModel: Sync {
    fn eval(&self, k: f64, t: f64) -> f64;
}

impl SpectralModel for InterferogramModel {
    fn eval(&self, k: f64, t: f64) -> f64 {
        InterferogramModel::eval(self, k, t)
    }
}

/// Continuous interferogram as a function of wavenumber (and time, when the
/// sample moves).
#[derive(Debug, Clone, PartialEq)]
pub struct InterferogramModel {
    pub refl: ReflectivityProfile,
    pub spec: Option<SourceSpectrum>,
    pub include_auto: bool,
    pub perturbation: Option<DepthPerturbation>,
}

impl InterferogramModel {
    pub fn new(refl: ReflectivityProfile, spec: Option<SourceSpectrum>, include_auto: bool) -> Self {
        InterferogramModel { refl, spec, include_auto, perturbation: None }
    }

    pub fn with_perturbation(mut self, p: DepthPerturbation) -> Self {
        self.perturbation = Some(p);
        self
    }

    /// Value at wavenumber `k`; `t` is the sweep time, used only by the
    /// depth perturbation.
    pub fn eval(&self, k: f64, t: f64) -> f64 {
        let s = self.spec.map_or(1.0, |sp| sp.shape(k));
        let dz = self
            .perturbation
            .map_or(0.0, |p| perturb_depth(0.0, p.amp, p.omega, p.t_start + t));
        let rr = self.refl.r_ref;
        let mut dc = rr;
        let mut cross = 0.0;
        for r in &self.refl.reflectors {
            dc += r.r;
            cross += (rr * r.r).sqrt() * (2.0 * k * (r.z + dz - self.refl.z_ref)).cos();
        }
        let mut auto = 0.0;
        if self.include_auto {
            let rs = &self.refl.reflectors;
            for m in 0..rs.len() {
                for n in (m + 1)..rs.len() {
                    auto += (rs[m].r * rs[n].r).sqrt() * (2.0 * k * (rs[m].z - rs[n].z)).cos();
                }
            }
        }
        s * (0.25 * dc + 0.5 * cross + 0.5 * auto)
    }

    pub fn sample(&self, profile: &SweepProfile, grid: &Grid, noise: &NoiseModel) -> Result<SampledSignal> {
        check_grid(profile, grid)?;
        let mut values: Vec<f64> =
            grid.times.iter().map(|&t| self.eval(profile.eval_unchecked(t), t)).collect();
        noise.add(&mut values, STREAM_INTERF);
        SampledSignal::new(grid, values)
    }
}

/// Sample-arm interferogram on `grid`.
pub fn synth_interferogram(
    profile: &SweepProfile,
    refl: &ReflectivityProfile,
    spec: &SourceSpectrum,
    grid: &Grid,
    noise: &NoiseModel,
    include_auto: bool,
) -> Result<SampledSignal> {
    InterferogramModel::new(refl.clone(), Some(*spec), include_auto).sample(profile, grid, noise)
}
