//! Level-crossing clock accuracy and LMS compensation of path skew.

use super::{require_nonempty, BenchOutput, Experiment};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::lcs::{check_rate, find_crossings, lms_adapt, LcsHardware, LevelLadder};
use crate::pipeline::Rig;
use crate::plot::{LinePlot, Series};

/// Clock events must land within this fraction of the sweep span.
const EVENT_TOL: f64 = 1e-12;
/// Residual timing error the adaptation must reach (s).
const SKEW_TOL: f64 = 1e-12;

pub fn run_skew(cfg: &Config) -> Result<BenchOutput> {
    let b = &cfg.bench;
    require_nonempty(&b.m_c, "M_C")?;
    require_nonempty(&b.skews, "skew")?;
    let rig = Rig::new(cfg)?;
    let p = rig.profile;
    let tol = EVENT_TOL * p.span();
    let mut out = BenchOutput::new(Experiment::Skew);
    out.derive("event_tolerance_rad_per_m", tol);

    for &m_c in &b.m_c {
        let ladder = rig.ladder(m_c)?;
        let clock = find_crossings(&p, &ladder);
        let worst = clock
            .events
            .iter()
            .zip(&clock.level_index)
            .map(|(&t, &l)| (p.eval_unchecked(t) - ladder.levels[l]).abs())
            .fold(0.0, f64::max);
        let cell = format!("M_C={m_c}");
        out.row("clock", &cell, "events", clock.len() as f64, "");
        out.row("clock", &cell, "max_level_error", worst, "rad/m");
        out.check(
            format!("clock_events[{cell}]"),
            clock.len() == ladder.len() && worst <= tol,
            format!("{} of {} levels crossed, worst error {worst:.3e} rad/m", clock.len(), ladder.len()),
        );
        let rate = check_rate(&clock, &LcsHardware::default());
        out.row("clock", &cell, "min_spacing", rate.min_spacing, "s");
        out.row("clock", &cell, "rate_violations", rate.violations as f64, "");
    }

    // Levels whose crossings stay inside the sweep after the largest shift.
    let max_skew = b.skews.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let full = rig.ladder(cfg.ladder.m_c)?;
    let margin = 2.0 * max_skew;
    let mut inner = Vec::new();
    for &k in &full.levels {
        let t = p.invert(k)?;
        if t >= margin && t <= p.t_scan - margin {
            inner.push(k);
        }
    }
    if inner.is_empty() {
        return Err(Error::Invalid(format!("skew {max_skew:e} s leaves no usable ladder levels")));
    }
    let inner = LevelLadder { levels: inner };
    let mut plot = LinePlot::new("LMS skew adaptation", "iteration", "max residual (s)");
    plot.log_y = true;
    for &skew in &b.skews {
        let cell = format!("skew={skew:e}");
        match lms_adapt(&p, &inner, skew, b.lms_step, b.lms_iters) {
            Ok(o) => {
                out.row("lms", &cell, "iterations", o.iterations as f64, "");
                out.row("lms", &cell, "residual", o.residual(), "s");
                out.check(
                    format!("lms[{cell}]"),
                    o.residual() < SKEW_TOL && o.iterations <= b.lms_iters,
                    format!("residual {:.3e} s after {} iterations", o.residual(), o.iterations),
                );
                let xs = (0..o.residual_trace.len()).map(|i| i as f64).collect();
                plot = plot.with(Series::new(cell, xs, o.residual_trace));
            }
            Err(e) => {
                out.check(format!("lms[{cell}]"), false, e.to_string());
            }
        }
    }
    out.plots.push(("lms".into(), plot));
    Ok(out)
}
