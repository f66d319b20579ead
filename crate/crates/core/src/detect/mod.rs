//! Soft and hard MIMO detectors.
//!
//! Bits are numbered user-major: bit `k * bits_per_symbol + t` is label bit
//! `t` of user `k`. A positive LLR favors bipolar `+1`.

mod bound;
mod dare;
mod linear;
mod oracle;

use std::ops::Deref;

pub use bound::{default_delta_d, exclusion_probability_bound};
pub use dare::{dare_detect, CandidateList, DareConfig, DareOutput, DEFAULT_LLR_CLAMP};
pub use linear::{lmmse_detect, mmse_sic_detect, LmmseFilter, SicOutput};
pub use oracle::{
    check_enumerable, maxlog_llr_exact, ml_detect, ml_detect_indices, ENUMERATION_LIMIT,
};

use crate::constellation::Constellation;
use crate::linalg::C64;

/// Signed per-bit reliabilities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrVector(pub Vec<f64>);

impl LlrVector {
    /// Hard decisions from the LLR signs; zero maps to `+1`.
    pub fn hard_bits(&self) -> Vec<i8> {
        self.0
            .iter()
            .map(|&v| if v < 0.0 { -1 } else { 1 })
            .collect()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LlrVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Concatenated labels of a vector of symbol indices.
pub fn labels_of(c: &Constellation, symbols: &[usize]) -> Vec<i8> {
    symbols
        .iter()
        .flat_map(|&s| c.label(s).iter().copied())
        .collect()
}

/// Max-log per-bit LLRs of a scalar observation `z = s + e`, `e ~ CN(0, nu)`,
/// written into `out` (one entry per label bit).
pub(crate) fn scalar_maxlog_llrs(c: &Constellation, z: C64, nu: f64, out: &mut [f64]) {
    let b = c.bits_per_symbol();
    let mut best = [[f64::INFINITY; 2]; 8];
    for (s, &p) in c.points().iter().enumerate() {
        let dist = (z - p).norm_sqr();
        for (t, &bit) in c.label(s).iter().enumerate() {
            let slot = &mut best[t][usize::from(bit < 0)];
            if dist < *slot {
                *slot = dist;
            }
        }
    }
    let inv = 1.0 / nu.max(f64::MIN_POSITIVE);
    for t in 0..b {
        out[t] = (best[t][1] - best[t][0]) * inv;
    }
}
