//! Finite spectral resolution: the interferogram seen through a Gaussian
//! spectral response of FWHM `δ_r k`.

use std::f64::consts::LN_2;

use crate::synth::SpectralModel;

/// `model ⊛ g` in wavenumber, `g` a unit-area Gaussian of FWHM `delta_r_k`,
/// evaluated by trapezoidal quadrature over ±6σ.
pub struct BlurredModel<'a, M: SpectralModel + ?Sized> {
    model: &'a M,
    offsets: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a, M: SpectralModel + ?Sized> BlurredModel<'a, M> {
    pub fn new(model: &'a M, delta_r_k: f64) -> Self {
        if !(delta_r_k > 0.0) {
            return BlurredModel { model, offsets: vec![0.0], weights: vec![1.0] };
        }
        let sigma = delta_r_k / (2.0 * (2.0 * LN_2).sqrt());
        let half = 96;
        let h = 6.0 * sigma / half as f64;
        let offsets: Vec<f64> = (-half..=half).map(|i| i as f64 * h).collect();
        let raw: Vec<f64> = offsets.iter().map(|u| (-0.5 * (u / sigma).powi(2)).exp()).collect();
        let total: f64 = raw.iter().sum();
        BlurredModel { model, offsets, weights: raw.iter().map(|w| w / total).collect() }
    }
}

impl<M: SpectralModel + ?Sized> SpectralModel for BlurredModel<'_, M> {
    fn eval(&self, k: f64, t: f64) -> f64 {
        self.offsets.iter().zip(&self.weights).map(|(u, w)| w * self.model.eval(k + u, t)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep_model::{rolloff_factor, ReflectivityProfile};
    use crate::synth::InterferogramModel;

    #[test]
    fn fringe_amplitude_follows_the_depth_factor() {
        let dz = 1.5e-3;
        let drk = 732.0;
        let m = InterferogramModel::new(ReflectivityProfile::mirror(1.0, 1.0, dz).unwrap(), None, false);
        let b = BlurredModel::new(&m, drk);
        // Fringe amplitude: project onto cos/sin over one fringe period.
        let k0 = 4.8e6;
        let period = std::f64::consts::PI / dz;
        let n = 64;
        let (mut c, mut s) = (0.0, 0.0);
        for i in 0..n {
            let k = k0 + period * i as f64 / n as f64;
            let v = b.eval(k, 0.0) - 0.5;
            c += v * (2.0 * k * dz).cos();
            s += v * (2.0 * k * dz).sin();
        }
        let amp = 2.0 * (c * c + s * s).sqrt() / n as f64;
        assert!((amp - 0.5 * rolloff_factor(drk, dz)).abs() < 1e-9);
    }
}
