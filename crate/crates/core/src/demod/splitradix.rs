//! Radix-2/4 split-radix FFT with optional operation counting.
//!
//! Real arithmetic is tallied as it is executed: a general twiddle costs four
//! multiplications and two additions, the `e^{−jπ/4}` family costs two of
//! each, and unit twiddles are free.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait OpCounter {
    fn add(&mut self, n: u64);
    fn mul(&mut self, n: u64);
}

/// Counter that compiles away.
pub struct NoCount;

impl OpCounter for NoCount {
    #[inline(always)]
    fn add(&mut self, _: u64) {}
    #[inline(always)]
    fn mul(&mut self, _: u64) {}
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpTally {
    pub adds: u64,
    pub mults: u64,
}

impl OpCounter for OpTally {
    fn add(&mut self, n: u64) {
        self.adds += n;
    }
    fn mul(&mut self, n: u64) {
        self.mults += n;
    }
}

#[derive(Debug, Clone, Copy)]
struct Twiddle {
    c: f64,
    s: f64,
}

#[derive(Debug, Clone)]
pub struct SplitRadix {
    n: usize,
    /// `e^{−j2πk/n}` for `k < n`.
    tw: Vec<Twiddle>,
}

impl SplitRadix {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Invalid(format!("split-radix length must be a power of two >= 2, got {n}")));
        }
        let tw = (0..n)
            .map(|k| {
                let a = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let (s, c) = a.sin_cos();
                Twiddle { c, s }
            })
            .collect();
        Ok(SplitRadix { n, tw })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Forward transform `X[k] = Σ x[n] e^{−j2πkn/N}`.
    pub fn process<C: OpCounter>(&self, input: &[Complex64], output: &mut [Complex64], ops: &mut C) {
        assert_eq!(input.len(), self.n);
        assert_eq!(output.len(), self.n);
        self.rec(input, 0, 1, output, self.n, ops);
    }

    fn rec<C: OpCounter>(
        &self,
        x: &[Complex64],
        offset: usize,
        stride: usize,
        out: &mut [Complex64],
        n: usize,
        ops: &mut C,
    ) {
        match n {
            1 => {
                out[0] = x[offset];
                return;
            }
            2 => {
                let a = x[offset];
                let b = x[offset + stride];
                out[0] = a + b;
                out[1] = a - b;
                ops.add(4);
                return;
            }
            _ => {}
        }
        let half = n / 2;
        let quarter = n / 4;
        {
            let (u, rest) = out.split_at_mut(half);
            let (z1, z3) = rest.split_at_mut(quarter);
            self.rec(x, offset, 2 * stride, u, half, ops);
            self.rec(x, offset + stride, 4 * stride, z1, quarter, ops);
            self.rec(x, offset + 3 * stride, 4 * stride, z3, quarter, ops);
        }
        let step = self.n / n;
        let eighth = n / 8;
        for k in 0..quarter {
            let a = out[half + k];
            let b = out[half + quarter + k];
            let (t1, t3) = if k == 0 {
                (a, b)
            } else if n >= 8 && k == eighth {
                (self.mul_eighth(a, false, ops), self.mul_eighth(b, true, ops))
            } else {
                (self.mul_tw(a, k * step, ops), self.mul_tw(b, 3 * k * step, ops))
            };
            let sum = t1 + t3;
            let diff = t1 - t3;
            ops.add(4);
            // −j·diff
            let jd = Complex64::new(diff.im, -diff.re);
            let u0 = out[k];
            let u1 = out[k + quarter];
            out[k] = u0 + sum;
            out[k + half] = u0 - sum;
            out[k + quarter] = u1 + jd;
            out[k + 3 * quarter] = u1 - jd;
            ops.add(8);
        }
    }

    #[inline]
    fn mul_tw<C: OpCounter>(&self, a: Complex64, idx: usize, ops: &mut C) -> Complex64 {
        let w = self.tw[idx % self.n];
        ops.mul(4);
        ops.add(2);
        Complex64::new(a.re * w.c - a.im * w.s, a.re * w.s + a.im * w.c)
    }

    /// Multiplication by `e^{−jπ/4}` or, when `third`, by `e^{−j3π/4}`.
    #[inline]
    fn mul_eighth<C: OpCounter>(&self, a: Complex64, third: bool, ops: &mut C) -> Complex64 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        ops.mul(2);
        ops.add(2);
        if third {
            let u = (a.im - a.re) * r;
            let v = (a.re + a.im) * r;
            Complex64::new(u, -v)
        } else {
            Complex64::new((a.re + a.im) * r, (a.im - a.re) * r)
        }
    }

}

/// Operation tally of one forward transform of length `n`.
pub fn measured_ops(n: usize) -> Result<OpTally> {
    let plan = SplitRadix::new(n)?;
    let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 0.0)).collect();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    let mut tally = OpTally::default();
    plan.process(&x, &mut y, &mut tally);
    Ok(tally)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let a = -2.0 * std::f64::consts::PI * ((i * k) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, a)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [2usize, 4, 8, 16, 32, 64, 128, 256] {
            let x: Vec<Complex64> =
                (0..n).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() - 0.2)).collect();
            let plan = SplitRadix::new(n).unwrap();
            let mut y = vec![Complex64::new(0.0, 0.0); n];
            plan.process(&x, &mut y, &mut NoCount);
            let want = dft(&x);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).norm() < 1e-10 * n as f64, "n={n}");
            }
        }
    }

    #[test]
    fn counts_follow_classical_closed_form() {
        // Real multiplications (4/3)N log N − (38/9)N + 6 + (2/9)(−1)^m and
        // additions (8/3)N log N − (16/9)N + 2 − (2/9)(−1)^m, times nine.
        for m in 1..=10u32 {
            let n = 1i64 << m;
            let sign = if m % 2 == 0 { 1 } else { -1 };
            let mults9 = 12 * n * m as i64 - 38 * n + 54 + 2 * sign;
            let adds9 = 24 * n * m as i64 - 16 * n + 18 - 2 * sign;
            let t = measured_ops(n as usize).unwrap();
            assert_eq!(9 * t.mults as i64, mults9, "mults n={n}");
            assert_eq!(9 * t.adds as i64, adds9, "adds n={n}");
        }
    }

    #[test]
    fn rejects_bad_length() {
        assert!(SplitRadix::new(12).is_err());
        assert!(SplitRadix::new(1).is_err());
    }
}
