//! Real-multiplication accounting.
//!
//! Every detector charges the multiplications it performs to a
//! [`ComplexityReport`]. One complex multiplication costs four real ones, a
//! squared magnitude two, and scaling a complex value by a real one two.
//! Additions, comparisons and table lookups are free.
//!
//! For the tree detector the three phases line up with the three terms of
//! [`max_complexity_bound`]:
//!
//! * `matched_filter`: forming `Q^H y`, exactly `4MK`.
//! * `misc`: interference cancellation, normalization by `R_ll` and slicing
//!   of every surviving parent at every layer, at most `2K(K+2)N_C`.
//! * `layer_metrics`: branch metric evaluations and the per-layer pruning
//!   threshold, at most `12KN_C`.

use crate::error::{Error, Result};

/// Cost of one complex-by-complex multiplication.
pub const CMUL: u64 = 4;
/// Cost of `|z|^2`.
pub const CNORM: u64 = 2;
/// Cost of scaling a complex number by a real one.
pub const CSCALE: u64 = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Phase {
    #[default]
    MatchedFilter,
    LayerMetrics,
    Misc,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::MatchedFilter, Phase::LayerMetrics, Phase::Misc];

    pub fn name(self) -> &'static str {
        match self {
            Phase::MatchedFilter => "matched_filter",
            Phase::LayerMetrics => "layer_metrics",
            Phase::Misc => "misc",
        }
    }
}

/// Per-invocation multiplication counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComplexityReport {
    pub matched_filter: u64,
    pub layer_metrics: u64,
    pub misc: u64,
}

impl ComplexityReport {
    pub fn charge(&mut self, phase: Phase, mults: u64) {
        match phase {
            Phase::MatchedFilter => self.matched_filter += mults,
            Phase::LayerMetrics => self.layer_metrics += mults,
            Phase::Misc => self.misc += mults,
        }
    }

    pub fn phase(&self, phase: Phase) -> u64 {
        match phase {
            Phase::MatchedFilter => self.matched_filter,
            Phase::LayerMetrics => self.layer_metrics,
            Phase::Misc => self.misc,
        }
    }

    /// Total real multiplications, the sum over all phases.
    pub fn real_mults(&self) -> u64 {
        self.matched_filter + self.layer_metrics + self.misc
    }
}

impl std::ops::AddAssign for ComplexityReport {
    fn add_assign(&mut self, rhs: Self) {
        self.matched_filter += rhs.matched_filter;
        self.layer_metrics += rhs.layer_metrics;
        self.misc += rhs.misc;
    }
}

/// Worst-case real multiplications per received vector of the tree detector:
/// `4MK + 2K(K+2)N_C + 12KN_C`.
pub fn max_complexity_bound(m: usize, k: usize, n_c: usize) -> Result<u64> {
    if m == 0 || k == 0 || n_c == 0 {
        return Err(Error::InvalidParameter(format!(
            "complexity bound needs positive dimensions, got m={m} k={k} n_c={n_c}"
        )));
    }
    let (m, k, n_c) = (m as u64, k as u64, n_c as u64);
    Ok(4 * m * k + 2 * k * (k + 2) * n_c + 12 * k * n_c)
}

/// Per-phase share of [`max_complexity_bound`], in the same order as
/// [`Phase::ALL`].
pub fn phase_bounds(m: usize, k: usize, n_c: usize) -> [u64; 3] {
    let (m, k, n_c) = (m as u64, k as u64, n_c as u64);
    [4 * m * k, 12 * k * n_c, 2 * k * (k + 2) * n_c]
}

/// Per-vector cost of applying a precomputed `K x M` linear filter.
pub fn linear_filter_cost(m: usize, k: usize) -> u64 {
    CMUL * (m * k) as u64
}
