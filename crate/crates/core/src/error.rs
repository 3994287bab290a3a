use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} outside domain [{lo}, {hi}] for {what}")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("sweep is not strictly increasing on [0, t_scan]: k'({t:e}) = {slope:e}")]
    NotMonotone { t: f64, slope: f64 },
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("estimator diverged at sample {index}")]
    Divergence { index: usize },
    #[error("cholesky factorization failed at sample {index}")]
    Cholesky { index: usize },
    #[error("maximum bin {bin} is at the spectrum edge in block {block}")]
    EdgeBin { block: usize, bin: usize },
    #[error("no peak stands 10x above the median background")]
    NoPeak,
    #[error("LMS did not converge in {iters} iterations, max residual {residual:e} s")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
