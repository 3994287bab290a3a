//! Arithmetic cost of the hardware phase estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpsMethod {
    /// FIR Hilbert transformer with `taps` coefficients.
    HilbertFir { taps: u64 },
    /// Interpolated DFT on blocks of `block` samples.
    Ipdft { block: u64 },
}

/// Operation counts. For the Hilbert FIR `adds`/`mults` are per output
/// sample, for the IpDFT per block; `total` covers `L` samples and `latency`
/// is in samples (Hilbert) or butterfly stages (IpDFT).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub adds: i64,
    pub mults: i64,
    pub total: i64,
    pub latency: i64,
}

/// Per-block additions `P(4/3 log2 P − 8/9) − (1/9)(−1)^{log2 P}`.
pub fn ipdft_block_adds(p: u64) -> i64 {
    let (p, m, sign) = split(p);
    exact_ninth(p * (12 * m - 8) - sign)
}

/// Per-block multiplications `P(2/3 log2 P − 19/9) + (1/9)(−1)^{log2 P}`.
pub fn ipdft_block_mults(p: u64) -> i64 {
    let (p, m, sign) = split(p);
    exact_ninth(p * (6 * m - 19) + sign)
}

fn split(p: u64) -> (i64, i64, i64) {
    let m = p.trailing_zeros() as i64;
    (p as i64, m, if m % 2 == 0 { 1 } else { -1 })
}

fn exact_ninth(v: i64) -> i64 {
    debug_assert_eq!(v % 9, 0);
    v / 9
}

pub fn count_ops(method: OpsMethod, len: u64) -> Result<OpCounts> {
    if len == 0 {
        return Err(Error::Invalid("signal length must be positive".into()));
    }
    match method {
        OpsMethod::HilbertFir { taps } => {
            if taps == 0 {
                return Err(Error::Invalid("Hilbert FIR needs at least one tap".into()));
            }
            let h = taps as i64;
            Ok(OpCounts { adds: h, mults: h, total: 2 * h * len as i64, latency: h })
        }
        OpsMethod::Ipdft { block } => {
            if !block.is_power_of_two() || block < 2 {
                return Err(Error::Invalid(format!("IpDFT block length must be a power of two, got {block}")));
            }
            let (p, m, _) = split(block);
            let blocks = len as i64 / p;
            Ok(OpCounts {
                adds: ipdft_block_adds(block),
                mults: ipdft_block_mults(block),
                total: blocks * (2 * p * m - 3 * p),
                latency: m,
            })
        }
    }
}
