//! Behavioral level-crossing sampler: wavenumber ladder, calibrating clock,
//! rate limits, figure of merit and skew adaptation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep_model::SweepProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelLadder {
    pub levels: Vec<f64>,
}

impl LevelLadder {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Mean spacing `δ_s k`.
    pub fn spacing(&self) -> f64 {
        let n = self.levels.len();
        if n < 2 {
            return 0.0;
        }
        (self.levels[n - 1] - self.levels[0]) / (n - 1) as f64
    }

    /// Levels `k_start + i·spacing` for `i < m`.
    pub fn from_spacing(k_start: f64, spacing: f64, m: usize) -> Result<Self> {
        if !(spacing > 0.0) || m < 2 {
            return Err(Error::Invalid(format!("ladder needs spacing > 0 and at least 2 levels, got {spacing}, {m}")));
        }
        Ok(LevelLadder { levels: (0..m).map(|i| k_start + i as f64 * spacing).collect() })
    }

    /// Largest ladder of the given spacing that fits inside the sweep, centred.
    pub fn fit_in(profile: &SweepProfile, spacing: f64) -> Result<Self> {
        let span = profile.span();
        let m = (span / spacing).floor() as usize + 1;
        let used = (m - 1) as f64 * spacing;
        Self::from_spacing(profile.k0 + 0.5 * (span - used), spacing, m)
    }
}

/// `m` equidistant levels from `k_start` to `k_end`, both included.
pub fn build_ladder(k_start: f64, k_end: f64, m: usize) -> Result<LevelLadder> {
    if m < 2 {
        return Err(Error::Domain { what: "ladder level count", value: m as f64, lo: 2.0, hi: f64::INFINITY });
    }
    if !(k_end > k_start) {
        return Err(Error::Invalid(format!("ladder needs k_end > k_start, got [{k_start}, {k_end}]")));
    }
    let step = (k_end - k_start) / (m - 1) as f64;
    let mut levels: Vec<f64> = (0..m).map(|i| k_start + i as f64 * step).collect();
    levels[m - 1] = k_end;
    Ok(LevelLadder { levels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibClock {
    pub events: Vec<f64>,
    pub level_index: Vec<usize>,
    /// Levels with no crossing.
    pub skipped: usize,
}

impl CalibClock {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The same clock arriving `dt` later.
    pub fn delayed(&self, dt: f64) -> Self {
        CalibClock { events: self.events.iter().map(|t| t + dt).collect(), ..self.clone() }
    }
}

/// Crossing times of the analytic sweep through every ladder level.
pub fn find_crossings(profile: &SweepProfile, ladder: &LevelLadder) -> CalibClock {
    let mut events = Vec::with_capacity(ladder.len());
    let mut level_index = Vec::with_capacity(ladder.len());
    let mut skipped = 0;
    for (i, &k) in ladder.levels.iter().enumerate() {
        match profile.invert(k) {
            Ok(t) if events.last().map_or(true, |&prev| t > prev) => {
                events.push(t);
                level_index.push(i);
            }
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} ladder levels lie outside the sweep");
    }
    CalibClock { events, level_index, skipped }
}

/// Crossing times of a sampled wavenumber track, by linear interpolation
/// between the bracketing samples. Each level is searched forward from the
/// previous crossing.
pub fn find_crossings_dense(times: &[f64], k: &[f64], ladder: &LevelLadder) -> Result<CalibClock> {
    if times.len() != k.len() || times.len() < 2 {
        return Err(Error::Contract(format!("dense crossing search needs matching tracks of >= 2 samples, got {} and {}", times.len(), k.len())));
    }
    let mut events = Vec::with_capacity(ladder.len());
    let mut level_index = Vec::with_capacity(ladder.len());
    let mut skipped = 0;
    let mut j = 0;
    for (i, &level) in ladder.levels.iter().enumerate() {
        while j + 1 < k.len() && k[j + 1] < level {
            j += 1;
        }
        if j + 1 >= k.len() || k[j] > level {
            skipped += 1;
            continue;
        }
        let (k0, k1) = (k[j], k[j + 1]);
        let frac = if k1 > k0 { (level - k0) / (k1 - k0) } else { 0.0 };
        let t = times[j] + frac * (times[j + 1] - times[j]);
        if events.last().map_or(true, |&prev| t > prev) {
            events.push(t);
            level_index.push(i);
        } else {
            skipped += 1;
        }
    }
    Ok(CalibClock { events, level_index, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcsHardware {
    pub bits: u32,
    pub full_scale: f64,
    /// Maximum event rate (events/s).
    pub max_event_rate: f64,
    pub loop_delay: f64,
}

impl LcsHardware {
    pub fn new(bits: u32, full_scale: f64, max_event_rate: f64, loop_delay: f64) -> Result<Self> {
        if bits < 1 || !(full_scale > 0.0) || !(max_event_rate > 0.0) || !(loop_delay >= 0.0) {
            return Err(Error::Invalid("LCS hardware needs bits >= 1, U > 0, f_s > 0, delay >= 0".into()));
        }
        Ok(LcsHardware { bits, full_scale, max_event_rate, loop_delay })
    }

    /// 7.7 GHz loop.
    pub fn preset_fast() -> Self {
        LcsHardware { bits: 8, full_scale: 1.0, max_event_rate: 7.7e9, loop_delay: 1.0 / 7.7e9 }
    }

    /// 5 GHz loop.
    pub fn preset_conservative() -> Self {
        LcsHardware { bits: 8, full_scale: 1.0, max_event_rate: 5e9, loop_delay: 2e-10 }
    }

    /// Largest input slope the ladder can follow, `U·f_s/2^Q` (V/s).
    pub fn slew_rate_bound(&self) -> f64 {
        self.full_scale * self.max_event_rate / 2f64.powi(self.bits as i32)
    }
}

impl Default for LcsHardware {
    fn default() -> Self {
        Self::preset_conservative()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub violations: usize,
    /// Indices `i` where `events[i+1] − events[i] < 1/f_s`.
    pub violating_pairs: Vec<usize>,
    pub min_spacing: f64,
    pub slew_rate_bound: f64,
}

impl RateReport {
    pub fn passes(&self) -> bool {
        self.violations == 0
    }

    /// Whether an analog input of the given slope stays within the slew bound.
    pub fn slope_ok(&self, slope: f64) -> bool {
        slope.abs() <= self.slew_rate_bound
    }
}

pub fn check_rate(clock: &CalibClock, hw: &LcsHardware) -> RateReport {
    let period = 1.0 / hw.max_event_rate;
    // Spacings equal to the period pass; allow for rounding in the subtraction.
    let limit = period * (1.0 - 1e-9);
    let mut violating_pairs = Vec::new();
    let mut min_spacing = f64::INFINITY;
    for (i, w) in clock.events.windows(2).enumerate() {
        let d = w[1] - w[0];
        min_spacing = min_spacing.min(d);
        if d < limit {
            violating_pairs.push(i);
        }
    }
    RateReport {
        violations: violating_pairs.len(),
        violating_pairs,
        min_spacing,
        slew_rate_bound: hw.slew_rate_bound(),
    }
}

/// Energy per conversion, `P / (2^ENOB · 2 · BW)`.
pub fn fom(power_w: f64, enob: f64, bw_hz: f64) -> Result<f64> {
    if !(power_w > 0.0 && enob > 0.0 && bw_hz > 0.0) {
        return Err(Error::Invalid(format!("FOM needs positive inputs, got P={power_w}, ENOB={enob}, BW={bw_hz}")));
    }
    Ok(power_w / (2f64.powf(enob) * 2.0 * bw_hz))
}

/// Skew between the calibrating and interferometric paths, from the arrival
/// times of one trigger edge through each. Positive means the calibrating
/// path is slower.
pub fn estimate_skew(trigger_time: f64, arrival_calibrating: f64, arrival_interferometric: f64) -> Result<f64> {
    let dc = arrival_calibrating - trigger_time;
    let di = arrival_interferometric - trigger_time;
    if dc < 0.0 || di < 0.0 {
        return Err(Error::Invalid(format!("path delays must be >= 0, got {dc:e} and {di:e}")));
    }
    Ok(dc - di)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmsOutcome {
    pub ladder: LevelLadder,
    pub iterations: usize,
    /// Max absolute timing residual before each iteration and after the last.
    pub residual_trace: Vec<f64>,
}

impl LmsOutcome {
    pub fn residual(&self) -> f64 {
        *self.residual_trace.last().unwrap_or(&0.0)
    }
}

/// Shifts every level so its crossing moves by `true_skew`. The per-event
/// error `Δt_skew − (t'_n − t_n)` drives `k'_n += μ·a1·e_n`.
pub fn lms_adapt(
    profile: &SweepProfile,
    ladder: &LevelLadder,
    true_skew: f64,
    step_mu: f64,
    iters: usize,
) -> Result<LmsOutcome> {
    const TOL: f64 = 1e-12;
    if !(step_mu > 0.0) {
        return Err(Error::Invalid(format!("LMS step must be positive, got {step_mu}")));
    }
    let base: Vec<f64> = ladder.levels.iter().map(|&k| profile.invert(k)).collect::<Result<_>>()?;
    let mut levels = ladder.levels.clone();
    let mut trace = Vec::with_capacity(iters + 1);
    for it in 0..=iters {
        let mut worst = 0.0f64;
        let mut errors = Vec::with_capacity(levels.len());
        for (k, t0) in levels.iter().zip(&base) {
            let e = true_skew - (profile.invert(*k)? - t0);
            worst = worst.max(e.abs());
            errors.push(e);
        }
        trace.push(worst);
        if worst < TOL {
            return Ok(LmsOutcome { ladder: LevelLadder { levels }, iterations: it, residual_trace: trace });
        }
        if it == iters {
            break;
        }
        for (k, e) in levels.iter_mut().zip(&errors) {
            *k += step_mu * profile.a1 * e;
        }
    }
    Err(Error::NoConvergence { iters, residual: *trace.last().unwrap() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> SweepProfile {
        SweepProfile::from_shape(4.7e6, 6e5, 1.0 / 150e3, [0.5, 1.5, -1.0]).unwrap()
    }

    #[test]
    fn ladder_examples() {
        assert_eq!(build_ladder(0.0, 1.0, 2).unwrap().levels, vec![0.0, 1.0]);
        assert_eq!(build_ladder(0.0, 1.0, 5).unwrap().levels, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(matches!(build_ladder(0.0, 1.0, 1), Err(Error::Domain { .. })));
    }

    #[test]
    fn linear_sweep_gives_uniform_events() {
        let p = SweepProfile::linear(0.0, 10.0, 1.0).unwrap();
        let c = find_crossings(&p, &build_ladder(0.0, 10.0, 11).unwrap());
        for (i, t) in c.events.iter().enumerate() {
            assert!((t - i as f64 * 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_middle_sweep_spaces_events_at_the_edges() {
        let p = cubic();
        let c = find_crossings(&p, &build_ladder(p.k0, p.k_end(), 101).unwrap());
        assert_eq!(c.len(), 101);
        let gaps: Vec<f64> = c.events.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps[0] > gaps[50] && gaps[99] > gaps[50]);
    }

    #[test]
    fn out_of_span_levels_are_skipped() {
        let p = cubic();
        let l = build_ladder(p.k0 - 1.0, p.k_end() + 1.0, 10).unwrap();
        let c = find_crossings(&p, &l);
        assert_eq!(c.len() + c.skipped, 10);
        assert_eq!(c.skipped, 2);
    }

    #[test]
    fn dense_mode_matches_analytic_within_half_sample() {
        let p = cubic();
        let n = 4096;
        let dt = p.t_scan / (n - 1) as f64;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let k: Vec<f64> = times.iter().map(|&t| p.eval_unchecked(t)).collect();
        let l = LevelLadder::fit_in(&p, 500.0).unwrap();
        let a = find_crossings(&p, &l);
        let d = find_crossings_dense(&times, &k, &l).unwrap();
        assert_eq!(a.len(), d.len());
        for (x, y) in a.events.iter().zip(&d.events) {
            assert!((x - y).abs() < 0.5 * dt);
        }
    }

    #[test]
    fn rate_check_boundary() {
        let hw = LcsHardware::preset_fast();
        let ok = CalibClock { events: vec![0.0, 130e-12, 260e-12], level_index: vec![0, 1, 2], skipped: 0 };
        assert!(check_rate(&ok, &hw).passes());
        let exact = CalibClock { events: vec![0.0, 1.0 / 7.7e9], level_index: vec![0, 1], skipped: 0 };
        assert!(check_rate(&exact, &hw).passes());
        let bad = CalibClock { events: vec![0.0, 100e-12, 300e-12], level_index: vec![0, 1, 2], skipped: 0 };
        let r = check_rate(&bad, &hw);
        assert_eq!(r.violations, 1);
        assert_eq!(r.violating_pairs, vec![0]);
        assert!((r.slew_rate_bound - 3.0078e7).abs() < 1e4);
    }

    #[test]
    fn fom_table_values() {
        assert!((fom(402e-6, 10.0, 5e6).unwrap() - 3.926e-14).abs() < 1e-16);
        assert!((fom(9.25e-6, 8.81, 2e6).unwrap() * 1e12 - 0.0052).abs() < 1e-4);
        assert!((fom(1.0, 8.0, 2.0).unwrap() * 2.0 - fom(1.0, 8.0, 1.0).unwrap()).abs() < 1e-18);
        assert!(fom(0.0, 8.0, 1.0).is_err());
    }

    #[test]
    fn skew_examples() {
        assert_eq!(estimate_skew(0.0, 5e-9, 5e-9).unwrap(), 0.0);
        assert!((estimate_skew(0.0, 7e-9, 5e-9).unwrap() - 2e-9).abs() < 1e-20);
        assert!(estimate_skew(1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn lms_zero_skew_is_a_fixed_point() {
        let p = cubic();
        let l = LevelLadder::fit_in(&p, 1000.0).unwrap();
        let out = lms_adapt(&p, &l, 0.0, 1.0, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.ladder, l);
    }

    #[test]
    fn lms_linear_shift_is_a1_tau() {
        let p = SweepProfile::linear(1e6, 1e5, 1e-5).unwrap();
        let l = build_ladder(1.01e6, 1.09e6, 50).unwrap();
        let tau = 3e-9;
        let out = lms_adapt(&p, &l, tau, 1.0, 5).unwrap();
        for (a, b) in out.ladder.levels.iter().zip(&l.levels) {
            assert!((a - b - p.a1 * tau).abs() < 1e-6);
        }
    }

    #[test]
    fn lms_cubic_converges() {
        let p = cubic();
        let inner = build_ladder(p.k0 + 0.01 * p.span(), p.k_end() - 0.01 * p.span(), 1024).unwrap();
        let out = lms_adapt(&p, &inner, 1e-9, 1.0, 200).unwrap();
        assert!(out.residual() < 1e-12);
        assert!(out.iterations < 200);
    }
}
