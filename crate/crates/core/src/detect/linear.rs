//! Linear MMSE and ordered MMSE successive interference cancellation.
//!
//! Both assume unit average symbol energy. Filters depend only on the
//! channel and are built once per realization; per-vector complexity only
//! charges applying them.

use crate::complexity::{linear_filter_cost, ComplexityReport, Phase, CMUL};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, hpd_inverse, CMatrix, C64};

use super::{scalar_maxlog_llrs, LlrVector};

/// `W = (H^H H + sigma^2 I)^{-1} H^H` with per-stream bias `mu_k = (WH)_kk`.
#[derive(Debug, Clone)]
pub struct LmmseFilter {
    w: CMatrix,
    mu: Vec<f64>,
}

impl LmmseFilter {
    pub fn new(h: &CMatrix, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::ZeroNoise);
        }
        if !h.is_finite() {
            return Err(Error::NonFinite);
        }
        let hh = h.adjoint();
        let mut gram = hh.matmul(h)?;
        for i in 0..h.cols() {
            gram[(i, i)] += sigma * sigma;
        }
        let w = hpd_inverse(&gram)?.matmul(&hh)?;
        let wh = w.matmul(h)?;
        let mu = (0..h.cols()).map(|k| wh[(k, k)].re).collect();
        Ok(Self { w, mu })
    }

    /// Post-equalization SINR `mu / (1 - mu)` of each stream.
    pub fn sinr(&self) -> Vec<f64> {
        self.mu.iter().map(|&mu| mu / (1.0 - mu)).collect()
    }

    pub fn detect(&self, y: &[C64], c: &Constellation) -> Result<(LlrVector, ComplexityReport)> {
        if y.len() != self.w.cols() {
            return Err(Error::DimensionMismatch(format!(
                "filter expects {} antennas, y has {}",
                self.w.cols(),
                y.len()
            )));
        }
        if !all_finite(y) {
            return Err(Error::NonFinite);
        }
        let k = self.w.rows();
        let bps = c.bits_per_symbol();
        let z = self.w.mul_vec(y)?;
        let mut llrs = vec![0.0; k * bps];
        for (user, (&zk, &mu)) in z.iter().zip(&self.mu).enumerate() {
            let nu = (1.0 - mu) / mu;
            scalar_maxlog_llrs(c, zk / mu, nu, &mut llrs[user * bps..(user + 1) * bps]);
        }
        let mut ops = ComplexityReport::default();
        ops.charge(Phase::MatchedFilter, linear_filter_cost(y.len(), k));
        Ok((LlrVector(llrs), ops))
    }
}

pub fn lmmse_detect(
    h: &CMatrix,
    y: &[C64],
    c: &Constellation,
    sigma: f64,
) -> Result<(LlrVector, ComplexityReport)> {
    LmmseFilter::new(h, sigma)?.detect(y, c)
}

#[derive(Debug, Clone)]
pub struct SicOutput {
    pub llrs: LlrVector,
    pub report: ComplexityReport,
    /// Users in the order they were detected.
    pub order: Vec<usize>,
}

/// Ordered MMSE-SIC: detect the remaining stream with the highest
/// post-equalization SINR (lowest index on ties), slice it, cancel its
/// contribution and repeat on the deflated channel.
pub fn mmse_sic_detect(h: &CMatrix, y: &[C64], c: &Constellation, sigma: f64) -> Result<SicOutput> {
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch(format!(
            "H has {} rows but y has {} entries",
            h.rows(),
            y.len()
        )));
    }
    if !all_finite(y) {
        return Err(Error::NonFinite);
    }
    let m = h.rows();
    let bps = c.bits_per_symbol();
    let mut llrs = vec![0.0; h.cols() * bps];
    let mut ops = ComplexityReport::default();
    let mut order = Vec::with_capacity(h.cols());
    let mut users: Vec<usize> = (0..h.cols()).collect();
    let mut hr = h.clone();
    let mut yr = y.to_vec();

    while !users.is_empty() {
        let filter = LmmseFilter::new(&hr, sigma)?;
        let sinr = filter.sinr();
        let mut pick = 0;
        for (j, &s) in sinr.iter().enumerate() {
            if s > sinr[pick] {
                pick = j;
            }
        }
        let user = users[pick];
        let mu = filter.mu[pick];
        let z: C64 = filter
            .w
            .row(pick)
            .iter()
            .zip(&yr)
            .map(|(a, b)| a * b)
            .sum::<C64>()
            / mu;
        scalar_maxlog_llrs(
            c,
            z,
            (1.0 - mu) / mu,
            &mut llrs[user * bps..(user + 1) * bps],
        );
        let decided = c.slice(z);
        for (r, v) in yr.iter_mut().enumerate() {
            *v -= hr[(r, pick)] * decided;
        }
        // filter row plus cancellation
        ops.charge(Phase::MatchedFilter, 2 * CMUL * m as u64);
        order.push(user);
        hr = hr.without_column(pick);
        users.remove(pick);
    }
    Ok(SicOutput {
        llrs: LlrVector(llrs),
        report: ops,
        order,
    })
}
