//! Interpolation of a uniformly sampled waveform at arbitrary times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpKind {
    Previous,
    Next,
    Linear,
    CubicSpline,
}

impl InterpKind {
    pub const ALL: [InterpKind; 4] = [InterpKind::Previous, InterpKind::Next, InterpKind::Linear, InterpKind::CubicSpline];

    pub fn name(&self) -> &'static str {
        match self {
            InterpKind::Previous => "previous",
            InterpKind::Next => "next",
            InterpKind::Linear => "linear",
            InterpKind::CubicSpline => "cubic_spline",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "previous" => Ok(InterpKind::Previous),
            "next" => Ok(InterpKind::Next),
            "linear" => Ok(InterpKind::Linear),
            "cubic_spline" | "spline" => Ok(InterpKind::CubicSpline),
            _ => Err(Error::Parse(format!("unknown interpolation '{s}' (previous, next, linear, cubic_spline)"))),
        }
    }
}

/// Second derivatives of the natural cubic spline through `y` at unit spacing.
pub fn natural_spline_moments(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on m[i-1] + 4 m[i] + m[i+1] = 6 Δ²y[i], m[0] = m[n-1] = 0.
    let k = n - 2;
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..k {
        let rhs = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]);
        if i == 0 {
            c[0] = 1.0 / 4.0;
            d[0] = rhs / 4.0;
        } else {
            let den = 4.0 - c[i - 1];
            c[i] = 1.0 / den;
            d[i] = (rhs - d[i - 1]) / den;
        }
    }
    m[k] = d[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = d[i] - c[i] * m[i + 2];
    }
    m
}

/// Evaluator over a uniform signal.
pub struct Interpolator<'a> {
    sig: &'a SampledSignal,
    t0: f64,
    rate: f64,
    kind: InterpKind,
    moments: Vec<f64>,
}

impl<'a> Interpolator<'a> {
    pub fn new(sig: &'a SampledSignal, kind: InterpKind) -> Result<Self> {
        let rate = sig.require_uniform()?;
        if sig.len() < 2 {
            return Err(Error::Invalid("interpolation needs at least two samples".into()));
        }
        let moments = if kind == InterpKind::CubicSpline { natural_spline_moments(&sig.values) } else { Vec::new() };
        Ok(Interpolator { sig, t0: sig.t0(), rate, kind, moments })
    }

    pub fn covers(&self, t: f64) -> bool {
        let u = (t - self.t0) * self.rate;
        u >= 0.0 && u <= (self.sig.len() - 1) as f64
    }

    /// `None` outside the sampled interval.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let y = &self.sig.values;
        let last = y.len() - 1;
        let u = (t - self.t0) * self.rate;
        // Times a hair past an end are rounding of exact end times.
        let slack = 1e-9;
        if !(u >= -slack && u <= last as f64 + slack) {
            return None;
        }
        let u = u.clamp(0.0, last as f64);
        let i = (u.floor() as usize).min(last - 1);
        let f = u - i as f64;
        Some(match self.kind {
            InterpKind::Previous => {
                if f >= 1.0 {
                    y[i + 1]
                } else {
                    y[i]
                }
            }
            InterpKind::Next => {
                if f <= 0.0 {
                    y[i]
                } else {
                    y[i + 1]
                }
            }
            InterpKind::Linear => y[i] + f * (y[i + 1] - y[i]),
            InterpKind::CubicSpline => {
                let (m0, m1) = (self.moments[i], self.moments[i + 1]);
                let g = 1.0 - f;
                g * y[i] + f * y[i + 1] + ((g * g * g - g) * m0 + (f * f * f - f) * m1) / 6.0
            }
        })
    }
}
