//! Block windows for the interpolated DFT.
//!
//! Windows are the periodic (DFT-even) forms, `w[n] = w[(P − n) mod P]`, so
//! their transforms are exact sums of shifted Dirichlet kernels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Rectangular,
    /// Rife-Vincent class I of the given order.
    Rvci(u32),
    Hann,
    Hamming,
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Cosine-sum coefficients `a_m` of `Σ (−1)^m a_m cos(2πmn/P)`.
pub fn rvci_coefficients(order: u32) -> Vec<f64> {
    let o = order as u64;
    let norm = 4f64.powi(order as i32);
    (0..=o)
        .map(|m| {
            let c = binomial(2 * o, o - m) / norm;
            if m == 0 {
                c
            } else {
                2.0 * c
            }
        })
        .collect()
}

fn cosine_sum(p: usize, coeffs: &[f64]) -> Vec<f64> {
    (0..p)
        .map(|n| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, a)| {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    sign * a * (2.0 * PI * (m * n) as f64 / p as f64).cos()
                })
                .sum()
        })
        .collect()
}

pub fn window_gen(kind: WindowKind, p: usize) -> Result<Vec<f64>> {
    if p < 8 {
        return Err(Error::Invalid(format!("window length must be >= 8, got {p}")));
    }
    let w = match kind {
        WindowKind::Rectangular => vec![1.0; p],
        WindowKind::Rvci(0) => {
            return Err(Error::Invalid("RVCI window order must be >= 1".into()));
        }
        WindowKind::Rvci(o) => cosine_sum(p, &rvci_coefficients(o)),
        WindowKind::Hann => cosine_sum(p, &[0.5, 0.5]),
        WindowKind::Hamming => cosine_sum(p, &[0.54, 0.46]),
    };
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_is_ones() {
        assert_eq!(window_gen(WindowKind::Rectangular, 8).unwrap(), vec![1.0; 8]);
    }

    #[test]
    fn rvci_one_is_hann() {
        for p in [8, 16, 64, 256] {
            let w = window_gen(WindowKind::Rvci(1), p).unwrap();
            for (n, v) in w.iter().enumerate() {
                let hann = 0.5 - 0.5 * (2.0 * PI * n as f64 / p as f64).cos();
                assert!((v - hann).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unit_peak_and_symmetry() {
        for kind in [WindowKind::Rectangular, WindowKind::Rvci(1), WindowKind::Rvci(2), WindowKind::Rvci(3), WindowKind::Hann, WindowKind::Hamming] {
            let p = 64;
            let w = window_gen(kind, p).unwrap();
            let max = w.iter().cloned().fold(f64::MIN, f64::max);
            assert!((max - 1.0).abs() < 1e-14, "{kind:?}");
            for n in 1..p {
                assert!((w[n] - w[p - n]).abs() < 1e-14);
            }
        }
        assert!(window_gen(WindowKind::Rvci(0), 16).is_err());
        assert!(window_gen(WindowKind::Hann, 4).is_err());
    }
}
