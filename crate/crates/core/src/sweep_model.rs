//! Source, sweep and interferometer geometry.
//!
//! Wavenumbers are in rad/m, times in seconds, lengths in metres.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cubic wavenumber sweep `k(t) = k0 + a1 t + a2 t² + a3 t³` on `[0, t_scan]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepProfile {
    pub k0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub t_scan: f64,
}

impl SweepProfile {
    pub fn new(k0: f64, a1: f64, a2: f64, a3: f64, t_scan: f64) -> Result<Self> {
        let p = SweepProfile { k0, a1, a2, a3, t_scan };
        p.validate()?;
        Ok(p)
    }

    /// Builds a sweep from a normalized shape: `k(t) = k0 + span·(c1 τ + c2 τ² + c3 τ³)`
    /// with `τ = t/t_scan`. The shape is rescaled so that `k(t_scan) = k0 + span`.
    pub fn from_shape(k0: f64, span: f64, t_scan: f64, shape: [f64; 3]) -> Result<Self> {
        let total: f64 = shape.iter().sum();
        if !(total.abs() > 0.0) {
            return Err(Error::Invalid("sweep shape coefficients sum to zero".into()));
        }
        let s = span / total;
        Self::new(
            k0,
            s * shape[0] / t_scan,
            s * shape[1] / (t_scan * t_scan),
            s * shape[2] / (t_scan * t_scan * t_scan),
            t_scan,
        )
    }

    pub fn linear(k0: f64, span: f64, t_scan: f64) -> Result<Self> {
        Self::new(k0, span / t_scan, 0.0, 0.0, t_scan)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k0, self.a1, self.a2, self.a3, self.t_scan]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Invalid("sweep coefficients must be finite".into()));
        }
        if self.t_scan <= 0.0 {
            return Err(Error::Invalid(format!("t_scan must be positive, got {}", self.t_scan)));
        }
        // k'(t) is a quadratic; its minimum on [0, T] is at an endpoint or the vertex.
        let mut candidates = vec![0.0, self.t_scan];
        if self.a3 != 0.0 {
            let tv = -self.a2 / (3.0 * self.a3);
            if tv > 0.0 && tv < self.t_scan {
                candidates.push(tv);
            }
        }
        for t in candidates {
            let slope = self.rate_unchecked(t);
            if !(slope > 0.0) {
                return Err(Error::NotMonotone { t, slope });
            }
        }
        Ok(())
    }

    /// `k(t) − k0`, evaluated in Horner form.
    #[inline]
    pub fn offset_unchecked(&self, t: f64) -> f64 {
        t * (self.a1 + t * (self.a2 + t * self.a3))
    }

    #[inline]
    pub fn eval_unchecked(&self, t: f64) -> f64 {
        self.k0 + self.offset_unchecked(t)
    }

    /// dk/dt.
    #[inline]
    pub fn rate_unchecked(&self, t: f64) -> f64 {
        self.a1 + t * (2.0 * self.a2 + 3.0 * self.a3 * t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.eval_unchecked(t))
    }

    pub fn rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.rate_unchecked(t))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_scan).contains(&t) {
            return Err(Error::Domain { what: "sweep time", value: t, lo: 0.0, hi: self.t_scan });
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.offset_unchecked(self.t_scan)
    }

    pub fn k_end(&self) -> f64 {
        self.k0 + self.span()
    }

    /// Inversion tolerance: `1e-12 · Δk_sweep`.
    pub fn tol_k(&self) -> f64 {
        1e-12 * self.span()
    }

    /// Time at which the sweep reaches `k_target`.
    pub fn invert(&self, k_target: f64) -> Result<f64> {
        let span = self.span();
        let tol = self.tol_k();
        let d = k_target - self.k0;
        if !(d >= -tol && d <= span + tol) {
            return Err(Error::Domain { what: "target wavenumber", value: k_target, lo: self.k0, hi: self.k0 + span });
        }
        let d = d.clamp(0.0, span);
        let f = |t: f64| self.offset_unchecked(t) - d;
        let (mut lo, mut hi) = (0.0, self.t_scan);
        if f(lo).abs() <= tol {
            return Ok(lo);
        }
        if f(hi).abs() <= tol {
            return Ok(hi);
        }
        let mut t = self.t_scan * d / span;
        for _ in 0..200 {
            let ft = f(t);
            if ft.abs() <= tol {
                return Ok(t);
            }
            if ft < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let next = t - ft / self.rate_unchecked(t);
            t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= f64::EPSILON * self.t_scan {
                break;
            }
        }
        // The bracket has collapsed to rounding level; take the better end.
        Ok(if f(lo).abs() < f(hi).abs() { lo } else { hi })
    }
}

pub fn eval_sweep(profile: &SweepProfile, t: f64) -> Result<f64> {
    profile.eval(t)
}

pub fn invert_sweep(profile: &SweepProfile, k_target: f64) -> Result<f64> {
    profile.invert(k_target)
}

/// Wavenumber for a vacuum wavelength.
pub fn wavenumber(lambda: f64) -> f64 {
    2.0 * PI / lambda
}

/// Wavenumber spacing equivalent to a wavelength spacing around `lambda0`.
pub fn k_spacing(lambda0: f64, dlambda: f64) -> f64 {
    2.0 * PI * dlambda / (lambda0 * lambda0)
}

/// Gaussian source spectrum `S(k) = exp(−((k−k_c)/Δk)²)/(Δk√π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpectrum {
    pub k_center: f64,
    /// Half width at 1/e.
    pub dk: f64,
}

impl SourceSpectrum {
    pub fn new(k_center: f64, dk: f64) -> Result<Self> {
        if !(dk > 0.0) || !(k_center > dk) {
            return Err(Error::Invalid(format!(
                "spectrum needs 0 < dk < k_center, got k_center={k_center}, dk={dk}"
            )));
        }
        Ok(SourceSpectrum { k_center, dk })
    }

    /// From center wavelength and FWHM wavelength bandwidth.
    pub fn from_wavelength(lambda0: f64, fwhm_lambda: f64) -> Result<Self> {
        if !(lambda0 > 0.0) || !(fwhm_lambda > 0.0) {
            return Err(Error::Invalid("wavelengths must be positive".into()));
        }
        let fwhm_k = k_spacing(lambda0, fwhm_lambda);
        Self::new(wavenumber(lambda0), fwhm_k / (2.0 * LN_2.sqrt()))
    }

    /// Source whose coherence length equals `l_c`.
    pub fn from_coherence_length(lambda0: f64, l_c: f64) -> Result<Self> {
        Self::new(wavenumber(lambda0), 2.0 * LN_2.sqrt() / l_c)
    }

    pub fn lambda0(&self) -> f64 {
        2.0 * PI / self.k_center
    }

    /// FWHM bandwidth in wavelength.
    pub fn fwhm_lambda(&self) -> f64 {
        let l0 = self.lambda0();
        2.0 * LN_2.sqrt() * self.dk * l0 * l0 / (2.0 * PI)
    }

    /// Unit-area density.
    pub fn density(&self, k: f64) -> f64 {
        self.shape(k) / (self.dk * PI.sqrt())
    }

    /// Peak-normalized shape used inside waveforms.
    #[inline]
    pub fn shape(&self, k: f64) -> f64 {
        let u = (k - self.k_center) / self.dk;
        (-u * u).exp()
    }
}

/// Axial resolution `2√ln2 / Δk`.
pub fn coherence_length(spec: &SourceSpectrum) -> f64 {
    2.0 * LN_2.sqrt() / spec.dk
}

/// Maximum unambiguous depth `π / (2 δ_s k)`.
pub fn max_depth(delta_s_k: f64) -> Result<f64> {
    if !(delta_s_k > 0.0) {
        return Err(Error::Domain { what: "sample spacing", value: delta_s_k, lo: 0.0, hi: f64::INFINITY });
    }
    Ok(PI / (2.0 * delta_s_k))
}

/// Depth where the roll-off envelope falls to one half, `2 ln2 / δ_r k`.
pub fn rolloff_6db(delta_r_k: f64) -> Result<f64> {
    if !(delta_r_k > 0.0) {
        return Err(Error::Domain { what: "spectral resolution", value: delta_r_k, lo: 0.0, hi: f64::INFINITY });
    }
    Ok(2.0 * LN_2 / delta_r_k)
}

/// Amplitude roll-off `exp(−δ_r k² z² / (4 ln 2))`.
pub fn rolloff_factor(delta_r_k: f64, z: f64) -> f64 {
    (-(delta_r_k * delta_r_k) * z * z / (4.0 * LN_2)).exp()
}

/// Mach-Zehnder calibrating interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MziGeometry {
    /// Path difference l2 − l1.
    pub dl: f64,
    pub c_amp: f64,
}

impl MziGeometry {
    pub fn new(dl: f64, c_amp: f64) -> Result<Self> {
        if !(dl >= 0.0) || !(c_amp > 0.0) {
            return Err(Error::Invalid(format!("MZI needs dl >= 0 and C > 0, got dl={dl}, C={c_amp}")));
        }
        Ok(MziGeometry { dl, c_amp })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reflector {
    pub z: f64,
    pub r: f64,
}

/// Reference mirror plus discrete sample reflectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityProfile {
    pub r_ref: f64,
    pub z_ref: f64,
    pub reflectors: Vec<Reflector>,
}

impl ReflectivityProfile {
    pub fn new(r_ref: f64, z_ref: f64, reflectors: Vec<Reflector>) -> Result<Self> {
        if !(r_ref > 0.0 && r_ref <= 1.0) {
            return Err(Error::Invalid(format!("reference reflectivity {r_ref} not in (0, 1]")));
        }
        for (i, a) in reflectors.iter().enumerate() {
            if !(0.0..=1.0).contains(&a.r) {
                return Err(Error::Invalid(format!("reflector {i} reflectivity {} not in [0, 1]", a.r)));
            }
            if reflectors[..i].iter().any(|b| b.z == a.z) {
                return Err(Error::Invalid(format!("duplicate reflector position {}", a.z)));
            }
        }
        Ok(ReflectivityProfile { r_ref, z_ref, reflectors })
    }

    /// Single mirror at path difference `dz` from the reference.
    pub fn mirror(r_ref: f64, r_s: f64, dz: f64) -> Result<Self> {
        Self::new(r_ref, 0.0, vec![Reflector { z: dz, r: r_s }])
    }

    pub fn reference_only(&self) -> Self {
        ReflectivityProfile { r_ref: self.r_ref, z_ref: self.z_ref, reflectors: Vec::new() }
    }
}
