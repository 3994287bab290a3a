//! Swept-source OCT spectral calibration: signal synthesis, sweep
//! estimation, level-crossing clocking, calibration pipelines and metrics.

pub mod bench;
pub mod calib;
pub mod config;
pub mod demod;
pub mod error;
pub mod io;
pub mod lcs;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod rng;
pub mod signal;
pub mod sweep_model;
pub mod synth;

pub use error::{Error, Result};
