//! Run configuration. TOML, SI units, unknown keys rejected.
//!
//! ```toml
//! seed = 1
//!
//! [source]
//! lambda0 = 1310e-9
//! coherence_length = 11.1e-6     # or fwhm_lambda = 68.2e-9; 11.1 µm if neither
//! spectral_resolution = 0.0      # δ_r λ in metres, 0 for an ideal source
//!
//! [sweep]
//! shape = [0.5, 1.5, -1.0]       # k(τ) − k0 ∝ c1 τ + c2 τ² + c3 τ³
//! span_dk = 4.0                  # sweep span in units of Δk, centred on k_c
//! rate = 150e3                   # sweeps per second, t_scan = 1/rate
//!
//! [mzi]
//! dl = 2e-3
//! c_amp = 1.0
//! normalized = false             # true drops the source envelope
//!
//! [sample]
//! r_ref = 1.0
//! z_ref = 0.0
//! include_auto = false
//! reflectors = [{ z = 998e-6, r = 1e-2 }]
//!
//! [ladder]
//! m_c = 8                        # level spacing 2π/(M_C·dl)
//!
//! [adc]
//! bits = 14
//! full_scale = 2.0
//! rate = 614.4e6
//!
//! [noise]
//! sigma_w = 1e-3
//!
//! [pipeline]
//! method = "realtime"
//! interp = "cubic_spline"
//! block_len = 64
//! fft_factor = 4
//!
//! [bench]
//! trials = 100
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calib::InterpKind;
use crate::error::{Error, Result};
use crate::sweep_model::{Reflector, ReflectivityProfile, SourceSpectrum, SweepProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub source: SourceConfig,
    pub sweep: SweepConfig,
    pub mzi: MziConfig,
    pub sample: SampleConfig,
    pub ladder: LadderConfig,
    pub adc: AdcConfig,
    pub noise: NoiseConfig,
    pub pipeline: PipelineConfig,
    pub bench: BenchConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            source: SourceConfig::default(),
            sweep: SweepConfig::default(),
            mzi: MziConfig::default(),
            sample: SampleConfig::default(),
            ladder: LadderConfig::default(),
            adc: AdcConfig::default(),
            noise: NoiseConfig::default(),
            pipeline: PipelineConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

/// Used when the source gives neither a coherence length nor a bandwidth.
pub const DEFAULT_COHERENCE_LENGTH: f64 = 11.1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub lambda0: f64,
    pub coherence_length: Option<f64>,
    pub fwhm_lambda: Option<f64>,
    pub spectral_resolution: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig { lambda0: 1310e-9, coherence_length: None, fwhm_lambda: None, spectral_resolution: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub shape: [f64; 3],
    pub span_dk: f64,
    pub rate: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { shape: [0.5, 1.5, -1.0], span_dk: 4.0, rate: 150e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MziConfig {
    pub dl: f64,
    pub c_amp: f64,
    pub normalized: bool,
}

impl Default for MziConfig {
    fn default() -> Self {
        MziConfig { dl: 2e-3, c_amp: 1.0, normalized: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub r_ref: f64,
    pub z_ref: f64,
    pub include_auto: bool,
    pub reflectors: Vec<Reflector>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { r_ref: 1.0, z_ref: 0.0, include_auto: false, reflectors: vec![Reflector { z: 998e-6, r: 1e-2 }] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    pub m_c: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig { m_c: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdcConfig {
    pub bits: u32,
    pub full_scale: f64,
    pub rate: f64,
}

impl Default for AdcConfig {
    fn default() -> Self {
        AdcConfig { bits: 14, full_scale: 2.0, rate: 4096.0 * 150e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma_w: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { sigma_w: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub method: String,
    pub interp: InterpKind,
    pub block_len: usize,
    /// FFT length as a multiple of the scan length, rounded up to a power of two.
    pub fft_factor: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { method: "realtime".into(), interp: InterpKind::CubicSpline, block_len: 64, fft_factor: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub trials: usize,
    pub depths: Vec<f64>,
    pub m_c: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub mse_depths: Vec<f64>,
    pub sigma_k_sq: Vec<f64>,
    pub closed_form_trials: usize,
    pub osr: Vec<f64>,
    pub bits: Vec<u32>,
    pub interp: Vec<InterpKind>,
    pub osr_depth: f64,
    pub perturbation_amp: f64,
    pub perturbation_freq: f64,
    pub timing_lengths: Vec<usize>,
    pub timing_repeats: usize,
    pub timing_block: usize,
    pub rolloff_resolution: f64,
    pub rolloff_depths: Vec<f64>,
    pub skews: Vec<f64>,
    pub lms_step: f64,
    pub lms_iters: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            trials: 100,
            depths: vec![514e-6, 998e-6, 1481e-6],
            m_c: vec![8, 12, 16],
            snr_db: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            mse_depths: vec![500e-6, 1000e-6, 1500e-6],
            sigma_k_sq: vec![1e-6, 1e-4, 1e-2],
            closed_form_trials: 1000,
            osr: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            bits: vec![8, 10, 12, 14],
            interp: vec![InterpKind::Previous, InterpKind::Linear, InterpKind::CubicSpline],
            osr_depth: 1000e-6,
            perturbation_amp: 1e-6,
            perturbation_freq: 100.0,
            timing_lengths: vec![4096, 8192, 16384],
            timing_repeats: 7,
            timing_block: 32,
            rolloff_resolution: 0.2e-9,
            rolloff_depths: (1..=30).map(|i| i as f64 * 0.1e-3).collect(),
            skews: vec![1e-12, 1e-11, 1e-10, 1e-9],
            lms_step: 1.0,
            lms_iters: 200,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Panics on a seed of 2^63 or more, which [`Config::validate`] rejects.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn spectrum(&self) -> Result<SourceSpectrum> {
        let s = &self.source;
        match (s.coherence_length, s.fwhm_lambda) {
            (Some(_), Some(_)) => Err(Error::Invalid("give either source.coherence_length or source.fwhm_lambda, not both".into())),
            (Some(l), None) if l > 0.0 => SourceSpectrum::from_coherence_length(s.lambda0, l),
            (None, Some(w)) => SourceSpectrum::from_wavelength(s.lambda0, w),
            (None, None) => SourceSpectrum::from_coherence_length(s.lambda0, DEFAULT_COHERENCE_LENGTH),
            (Some(l), None) => Err(Error::Invalid(format!("coherence length must be positive, got {l}"))),
        }
    }

    pub fn t_scan(&self) -> f64 {
        1.0 / self.sweep.rate
    }

    /// Sweep spanning `span_dk·Δk` centred on the source.
    pub fn profile(&self) -> Result<SweepProfile> {
        let spec = self.spectrum()?;
        let span = self.sweep.span_dk * spec.dk;
        SweepProfile::from_shape(spec.k_center - 0.5 * span, span, self.t_scan(), self.sweep.shape)
    }

    pub fn reflectivity(&self) -> Result<ReflectivityProfile> {
        ReflectivityProfile::new(self.sample.r_ref, self.sample.z_ref, self.sample.reflectors.clone())
    }

    /// MZI samples per sweep.
    pub fn samples(&self) -> usize {
        (self.t_scan() * self.adc.rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::Invalid(format!("seed must be below 2^63, got {}", self.seed)));
        }
        if !(self.source.lambda0 > 0.0) {
            return Err(Error::Invalid("source.lambda0 must be positive".into()));
        }
        if !(self.source.spectral_resolution >= 0.0) {
            return Err(Error::Invalid("source.spectral_resolution must be >= 0".into()));
        }
        if !(self.sweep.rate > 0.0 && self.sweep.span_dk > 0.0) {
            return Err(Error::Invalid("sweep.rate and sweep.span_dk must be positive".into()));
        }
        let spec = self.spectrum()?;
        if !(self.sweep.span_dk < 2.0 * spec.k_center / spec.dk) {
            return Err(Error::Invalid("sweep reaches nonpositive wavenumbers".into()));
        }
        self.profile()?;
        crate::sweep_model::MziGeometry::new(self.mzi.dl, self.mzi.c_amp)?;
        if !(self.mzi.dl > 0.0) {
            return Err(Error::Invalid("mzi.dl must be positive".into()));
        }
        self.reflectivity()?;
        if self.ladder.m_c < 4 || self.ladder.m_c % 2 != 0 {
            return Err(Error::Invalid(format!("ladder.m_c must be an even number >= 4, got {}", self.ladder.m_c)));
        }
        crate::synth::AdcModel::new(self.adc.bits, self.adc.full_scale, self.adc.rate)?;
        if self.samples() < 64 {
            return Err(Error::Invalid(format!("adc.rate gives only {} samples per sweep", self.samples())));
        }
        if !(self.noise.sigma_w >= 0.0) {
            return Err(Error::Invalid("noise.sigma_w must be >= 0".into()));
        }
        if !self.pipeline.block_len.is_power_of_two() || self.pipeline.block_len < 8 {
            return Err(Error::Invalid(format!("pipeline.block_len must be a power of two >= 8, got {}", self.pipeline.block_len)));
        }
        if self.pipeline.fft_factor == 0 {
            return Err(Error::Invalid("pipeline.fft_factor must be >= 1".into()));
        }
        crate::pipeline::Method::parse(&self.pipeline.method)?;
        let b = &self.bench;
        if b.trials == 0 {
            return Err(Error::Invalid("bench.trials must be >= 1".into()));
        }
        if b.m_c.iter().any(|&m| m < 4 || m % 2 != 0) {
            return Err(Error::Invalid("bench.m_c entries must be even and >= 4".into()));
        }
        if b.osr.iter().any(|&o| !(o > 0.0)) || b.depths.iter().chain(&b.mse_depths).any(|&z| !(z > 0.0)) {
            return Err(Error::Invalid("bench OSR and depth entries must be positive".into()));
        }
        if b.bits.iter().any(|&q| !(1..=24).contains(&q)) {
            return Err(Error::Invalid("bench.bits entries must lie in 1..=24".into()));
        }
        if b.timing_repeats < 5 {
            return Err(Error::Invalid("bench.timing_repeats must be >= 5".into()));
        }
        if !b.timing_block.is_power_of_two() || b.timing_block < 8 {
            return Err(Error::Invalid("bench.timing_block must be a power of two >= 8".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(c.samples(), 4096);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = Config::from_toml("[source]\nlazer = 1\n").unwrap_err();
        assert!(e.to_string().contains("lazer"), "{e}");
        let e = Config::from_toml("lazer = 1\n").unwrap_err();
        assert!(e.to_string().contains("lazer"), "{e}");
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_toml("seed = 9\n[sample]\nreflectors = [{ z = 5e-4, r = 0.5 }]\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.sample.reflectors, vec![Reflector { z: 5e-4, r: 0.5 }]);
        assert_eq!(c.adc, AdcConfig::default());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(Config::from_toml("[mzi]\ndl = -1.0\n").is_err());
        assert!(Config::from_toml("[pipeline]\nmethod = \"magic\"\n").is_err());
        assert!(Config::from_toml("[source]\nfwhm_lambda = 68e-9\n").is_ok());
        assert!(Config::from_toml("[source]\nfwhm_lambda = 68e-9\ncoherence_length = -1.0\n").is_err());
    }
}
