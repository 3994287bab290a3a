use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep_model::SweepProfile;

/// Sample instants, with the rate recorded when they are uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub times: Vec<f64>,
    pub rate: Option<f64>,
}

impl Grid {
    /// `n` samples `t0 + i/rate`.
    pub fn uniform(t0: f64, rate: f64, n: usize) -> Result<Self> {
        if !(rate > 0.0) || !t0.is_finite() {
            return Err(Error::Invalid(format!("uniform grid needs rate > 0, got {rate}")));
        }
        let times = (0..n).map(|i| t0 + i as f64 / rate).collect();
        Ok(Grid { times, rate: Some(rate) })
    }

    /// `n` samples covering `[0, t_scan)` at rate `n / t_scan`.
    pub fn scan(profile: &SweepProfile, n: usize) -> Self {
        let rate = n as f64 / profile.t_scan;
        Grid { times: (0..n).map(|i| i as f64 / rate).collect(), rate: Some(rate) }
    }

    /// Uniform samples at `rate` that fit in `[t0, t_scan]`.
    pub fn within_scan(profile: &SweepProfile, t0: f64, rate: f64) -> Result<Self> {
        if !(0.0..profile.t_scan).contains(&t0) {
            return Err(Error::Domain { what: "grid start", value: t0, lo: 0.0, hi: profile.t_scan });
        }
        let n = ((profile.t_scan - t0) * rate).floor() as usize + 1;
        let mut g = Self::uniform(t0, rate, n)?;
        while g.times.last().is_some_and(|&t| t > profile.t_scan) {
            g.times.pop();
        }
        Ok(g)
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Contract("sample times must be strictly increasing".into()));
        }
        Ok(Grid { times, rate: None })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A real waveform with its time base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Samples per second when the grid is uniform.
    pub rate: Option<f64>,
}

impl SampledSignal {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Contract(format!(
                "{} times but {} values",
                grid.len(),
                values.len()
            )));
        }
        Ok(SampledSignal { times: grid.times.clone(), values, rate: grid.rate })
    }

    pub fn uniform_from(t0: f64, rate: f64, values: Vec<f64>) -> Result<Self> {
        let g = Grid::uniform(t0, rate, values.len())?;
        Ok(SampledSignal { times: g.times, values, rate: Some(rate) })
    }

    pub fn is_uniform(&self) -> bool {
        self.rate.is_some()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn require_uniform(&self) -> Result<f64> {
        self.rate.ok_or_else(|| Error::Contract("estimator needs a uniformly sampled signal".into()))
    }

    pub fn t0(&self) -> f64 {
        self.times.first().copied().unwrap_or(0.0)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        SampledSignal { times: self.times.clone(), values, rate: self.rate }
    }

    pub fn power(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}
