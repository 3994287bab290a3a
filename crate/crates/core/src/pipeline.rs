//! A configured acquisition chain: source, sweep, MZI, ladder and ADC, with
//! every calibration method behind one entry point.

use std::f64::consts::PI;

use crate::calib::{
    realtime_from_clock, reconstruct_ascan, resample_calibrate, uncalibrated, zero_crossing_calibrate,
    zero_crossing::sign_changes, AScan, BlurredModel, CalibratedScan, ResampleConfig, ZeroCrossingMode,
};
use crate::config::Config;
use crate::demod::{Estimator, IpdftParams};
use crate::error::{Error, Result};
use crate::lcs::{find_crossings, LevelLadder};
use crate::signal::{Grid, SampledSignal};
use crate::sweep_model::{k_spacing, MziGeometry, ReflectivityProfile, SourceSpectrum, SweepProfile};
use crate::synth::{synth_mzi, AdcModel, InterferogramModel, NoiseModel, SpectralModel, STREAM_MZI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Resample(Estimator),
    ZeroCrossing(ZeroCrossingMode),
    Realtime,
}

impl Method {
    pub const NAMES: [&'static str; 10] = [
        "hilbert",
        "envelope",
        "ekf",
        "ukf",
        "ipdft-by2",
        "ipdft-rvci1",
        "ipdft-rvci3",
        "zero-crossing",
        "zero-crossing-quad",
        "realtime",
    ];

    /// Parses a method name; `m_c` and `block_len` fill in the envelope and
    /// IpDFT settings.
    pub fn parse_with(name: &str, m_c: usize, block_len: usize) -> Result<Self> {
        Ok(match name {
            "hilbert" => Method::Resample(Estimator::Hilbert),
            "envelope" => Method::Resample(Estimator::Envelope { m_c }),
            "ekf" => Method::Resample(Estimator::Ekf),
            "ukf" => Method::Resample(Estimator::Ukf),
            "ipdft-by2" => Method::Resample(Estimator::Ipdft(IpdftParams::by2(block_len))),
            "ipdft-rvci1" => Method::Resample(Estimator::Ipdft(IpdftParams::rvci(block_len, 1))),
            "ipdft-rvci3" => Method::Resample(Estimator::Ipdft(IpdftParams::rvci(block_len, 3))),
            "zero-crossing" => Method::ZeroCrossing(ZeroCrossingMode::Basic),
            "zero-crossing-quad" => Method::ZeroCrossing(ZeroCrossingMode::Quadrature),
            "realtime" => Method::Realtime,
            _ => {
                return Err(Error::Parse(format!("unknown method '{name}' (valid: {})", Self::NAMES.join(", "))));
            }
        })
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::parse_with(name, 8, 64)
    }

    pub fn name(&self) -> String {
        match self {
            Method::Resample(e) => e.name(),
            Method::ZeroCrossing(ZeroCrossingMode::Basic) => "zero-crossing".into(),
            Method::ZeroCrossing(ZeroCrossingMode::Quadrature) => "zero-crossing-quad".into(),
            Method::Realtime => "realtime".into(),
        }
    }
}

/// Uniformly sampled detector outputs of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub mzi: SampledSignal,
    pub interferogram: SampledSignal,
}

#[derive(Debug, Clone)]
pub struct Rig {
    pub spec: SourceSpectrum,
    pub profile: SweepProfile,
    pub geom: MziGeometry,
    pub adc: AdcModel,
    pub samples: usize,
    pub normalized_mzi: bool,
    pub interp: crate::calib::InterpKind,
    pub fft_factor: usize,
    /// FWHM spectral resolution in wavenumber, zero when ideal.
    pub delta_r_k: f64,
    pub include_auto: bool,
}

impl Rig {
    pub fn new(cfg: &Config) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.spectrum()?;
        Ok(Rig {
            spec,
            profile: cfg.profile()?,
            geom: MziGeometry::new(cfg.mzi.dl, cfg.mzi.c_amp)?,
            adc: AdcModel::new(cfg.adc.bits, cfg.adc.full_scale, cfg.adc.rate)?,
            samples: cfg.samples(),
            normalized_mzi: cfg.mzi.normalized,
            interp: cfg.pipeline.interp,
            fft_factor: cfg.pipeline.fft_factor,
            delta_r_k: k_spacing(cfg.source.lambda0, cfg.source.spectral_resolution),
            include_auto: cfg.sample.include_auto,
        })
    }

    pub fn grid(&self) -> Grid {
        Grid::scan(&self.profile, self.samples)
    }

    /// Levels spaced `2π/(M_C·dl)`, centred in the sweep.
    pub fn ladder(&self, m_c: usize) -> Result<LevelLadder> {
        if m_c == 0 {
            return Err(Error::Invalid("M_C must be positive".into()));
        }
        LevelLadder::fit_in(&self.profile, 2.0 * PI / (m_c as f64 * self.geom.dl))
    }

    /// Largest fringe frequency (Hz) of a reflector at path difference `z`.
    pub fn max_fringe_rate(&self, z: f64) -> f64 {
        let n = 2048;
        let kmax = (0..=n)
            .map(|i| self.profile.rate_unchecked(i as f64 * self.profile.t_scan / n as f64))
            .fold(0.0, f64::max);
        2.0 * z.abs() * kmax / (2.0 * PI)
    }

    pub fn mzi(&self, noise: &NoiseModel) -> Result<SampledSignal> {
        if self.normalized_mzi {
            let grid = self.grid();
            let mut v: Vec<f64> = grid
                .times
                .iter()
                .map(|&t| self.geom.c_amp * (self.geom.dl * self.profile.eval_unchecked(t)).cos())
                .collect();
            noise.add(&mut v, STREAM_MZI);
            SampledSignal::new(&grid, v)
        } else {
            synth_mzi(&self.profile, &self.geom, &self.spec, &self.grid(), noise)
        }
    }

    pub fn model(&self, refl: &ReflectivityProfile) -> InterferogramModel {
        InterferogramModel::new(refl.clone(), Some(self.spec), self.include_auto)
    }

    /// Noise on both detectors comes from the same seed on separate streams.
    pub fn acquire(&self, refl: &ReflectivityProfile, noise: &NoiseModel) -> Result<Acquisition> {
        let model = self.model(refl);
        let interferogram = if self.delta_r_k > 0.0 {
            sample_model(&BlurredModel::new(&model, self.delta_r_k), &self.profile, &self.grid(), noise)?
        } else {
            model.sample(&self.profile, &self.grid(), noise)?
        };
        Ok(Acquisition { mzi: self.mzi(noise)?, interferogram })
    }

    pub fn calibrate(
        &self,
        method: &Method,
        refl: &ReflectivityProfile,
        ladder: &LevelLadder,
        noise: &NoiseModel,
    ) -> Result<CalibratedScan> {
        match method {
            Method::Realtime => {
                let model = self.model(refl);
                let clock = find_crossings(&self.profile, ladder);
                if self.delta_r_k > 0.0 {
                    let blurred = BlurredModel::new(&model, self.delta_r_k);
                    realtime_from_clock(&blurred, &self.profile, ladder, &clock, noise, Some(&self.adc))
                } else {
                    realtime_from_clock(&model, &self.profile, ladder, &clock, noise, Some(&self.adc))
                }
            }
            _ => self.calibrate_acquired(method, &self.acquire(refl, noise)?, ladder, noise.sigma_w),
        }
    }

    /// Calibration of already sampled detector outputs.
    pub fn calibrate_acquired(
        &self,
        method: &Method,
        acq: &Acquisition,
        ladder: &LevelLadder,
        sigma_w: f64,
    ) -> Result<CalibratedScan> {
        match method {
            Method::Resample(est) => {
                let cfg = ResampleConfig::new(self.interp);
                resample_calibrate(&acq.mzi, &acq.interferogram, est, sigma_w, self.geom.dl, &self.profile, ladder, &cfg)
            }
            Method::ZeroCrossing(mode) => {
                let first = *sign_changes(&acq.mzi.times, &acq.mzi.values)
                    .first()
                    .ok_or_else(|| Error::Degenerate("MZI has no zero crossing".into()))?;
                let k_first = self.zero_crossing_anchor(*mode, first, &acq.mzi)?;
                zero_crossing_calibrate(&acq.mzi, &acq.interferogram, *mode, self.geom.dl, k_first)
            }
            Method::Realtime => Err(Error::Contract("the real-time path samples the model, not an acquisition".into())),
        }
    }

    /// Wavenumber of the first crossing, snapped to the nearest value where
    /// the MZI (or its quadrature) vanishes.
    fn zero_crossing_anchor(&self, mode: ZeroCrossingMode, t_first_cos: f64, mzi: &SampledSignal) -> Result<f64> {
        let dl = self.geom.dl;
        match mode {
            ZeroCrossingMode::Basic => {
                let phi = dl * self.profile.eval(t_first_cos)?;
                Ok((PI / 2.0 + ((phi - PI / 2.0) / PI).round() * PI) / dl)
            }
            ZeroCrossingMode::Quadrature => {
                let q: Vec<f64> = crate::demod::hilbert::analytic_signal(&mzi.values).iter().map(|c| c.im).collect();
                let t_q = sign_changes(&mzi.times, &q).first().copied().unwrap_or(f64::INFINITY);
                let t = t_first_cos.min(t_q);
                let phi = dl * self.profile.eval(t)?;
                Ok((phi / (PI / 2.0)).round() * (PI / 2.0) / dl)
            }
        }
    }

    /// Uniform-time interferogram read as a linear sweep over the full span.
    pub fn uncalibrated(&self, acq: &Acquisition) -> Result<CalibratedScan> {
        uncalibrated(&acq.interferogram, self.profile.k0, self.profile.k_end())
    }

    pub fn fft_len(&self, scan_len: usize) -> usize {
        (scan_len * self.fft_factor).next_power_of_two()
    }

    pub fn ascan(&self, scan: &CalibratedScan) -> Result<AScan> {
        reconstruct_ascan(scan, self.fft_len(scan.len()), None)
    }
}

fn sample_model<M: SpectralModel + ?Sized>(
    model: &M,
    profile: &SweepProfile,
    grid: &Grid,
    noise: &NoiseModel,
) -> Result<SampledSignal> {
    let mut v: Vec<f64> = grid.times.iter().map(|&t| model.eval(profile.eval_unchecked(t), t)).collect();
    noise.add(&mut v, crate::synth::STREAM_INTERF);
    SampledSignal::new(grid, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::fwhm;

    fn rig() -> (Rig, ReflectivityProfile) {
        let cfg = Config::default();
        (Rig::new(&cfg).unwrap(), cfg.reflectivity().unwrap())
    }

    #[test]
    fn method_names_round_trip() {
        for n in Method::NAMES {
            assert_eq!(Method::parse(n).unwrap().name(), n);
        }
        let e = Method::parse("kalman").unwrap_err().to_string();
        assert!(e.contains("zero-crossing-quad"));
    }

    #[test]
    fn every_method_finds_the_mirror() {
        let (rig, _) = rig();
        // Inside the dl/2 range of plain zero-crossing sampling.
        let z = 600e-6;
        let refl = ReflectivityProfile::mirror(1.0, 1e-2, z).unwrap();
        let ladder = rig.ladder(8).unwrap();
        let noise = NoiseModel::new(1e-3, 4).unwrap();
        for name in Method::NAMES {
            let m = Method::parse(name).unwrap();
            let scan = rig.calibrate(&m, &refl, &ladder, &noise).unwrap();
            let a = rig.ascan(&scan).unwrap();
            let (i, _) = a.peak_from(100e-6).unwrap();
            assert!((a.depth[i] - z).abs() < 3.0 * a.bin_width(), "{name}: {}", a.depth[i]);
            let w = fwhm(&a, Some(z)).unwrap();
            assert!((w - 11.1e-6).abs() < 0.15 * 11.1e-6, "{name}: fwhm {w}");
        }
    }

    #[test]
    fn zero_crossings_step_half_a_fringe() {
        let (rig, refl) = rig();
        let acq = rig.acquire(&refl, &NoiseModel::none()).unwrap();
        let basic = rig.calibrate_acquired(&Method::parse("zero-crossing").unwrap(), &acq, &rig.ladder(8).unwrap(), 0.0).unwrap();
        let cycles = rig.geom.dl * rig.profile.span() / (2.0 * PI);
        assert!((basic.len() as f64 - 2.0 * cycles).abs() <= 2.0);
        assert!((basic.spacing() - PI / rig.geom.dl).abs() < 1e-9);
    }
}
