//! Exhaustive-search references: hard ML and exact max-log LLRs.

use crate::constellation::{Constellation, SymbolIndex};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, CMatrix, CVector, C64};

use super::LlrVector;

/// Largest number of symbol vectors an exhaustive search may visit.
pub const ENUMERATION_LIMIT: usize = 1 << 20;

pub fn check_enumerable(order: usize, k: usize) -> Result<usize> {
    let vectors = (order as f64).powi(k as i32);
    if vectors > ENUMERATION_LIMIT as f64 {
        return Err(Error::TooLarge {
            vectors,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(vectors as usize)
}

fn check_inputs(h: &CMatrix, y: &[C64]) -> Result<()> {
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch(format!(
            "H has {} rows but y has {} entries",
            h.rows(),
            y.len()
        )));
    }
    if !h.is_finite() || !all_finite(y) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Visits every symbol vector in odometer order (user 0 fastest) and calls
/// `visit(symbols, ||y - Hs||^2)`. The residual is updated incrementally as
/// digits change.
fn enumerate(
    h: &CMatrix,
    y: &[C64],
    c: &Constellation,
    mut visit: impl FnMut(&[SymbolIndex], f64),
) {
    let (m, k) = (h.rows(), h.cols());
    let order = c.order();
    let mut digits = vec![0 as SymbolIndex; k];
    // residual = y - H s for s = all point 0
    let p0 = c.point(0);
    let mut residual: CVector = (0..m)
        .map(|r| y[r] - h.row(r).iter().map(|hv| hv * p0).sum::<C64>())
        .collect();
    loop {
        visit(&digits, residual.iter().map(|z| z.norm_sqr()).sum());
        // advance
        let mut pos = 0;
        loop {
            if pos == k {
                return;
            }
            let old = digits[pos];
            let new = if old + 1 == order { 0 } else { old + 1 };
            digits[pos] = new;
            let delta = c.point(new) - c.point(old);
            for (r, z) in residual.iter_mut().enumerate() {
                *z -= h[(r, pos)] * delta;
            }
            if new != 0 {
                break;
            }
            pos += 1;
        }
    }
}

/// Symbol indices minimizing `||y - Hs||^2`; the first minimizer in
/// enumeration order (user 0 varying fastest) wins ties.
pub fn ml_detect_indices(h: &CMatrix, y: &[C64], c: &Constellation) -> Result<Vec<SymbolIndex>> {
    check_inputs(h, y)?;
    check_enumerable(c.order(), h.cols())?;
    let mut best = vec![0; h.cols()];
    let mut best_metric = f64::INFINITY;
    enumerate(h, y, c, |s, metric| {
        if metric < best_metric {
            best_metric = metric;
            best.copy_from_slice(s);
        }
    });
    Ok(best)
}

/// Hard ML symbol vector.
pub fn ml_detect(h: &CMatrix, y: &[C64], c: &Constellation) -> Result<CVector> {
    Ok(ml_detect_indices(h, y, c)?
        .into_iter()
        .map(|s| c.point(s))
        .collect())
}

/// Exact (unclamped) max-log LLRs by exhaustive enumeration.
pub fn maxlog_llr_exact(
    h: &CMatrix,
    y: &[C64],
    c: &Constellation,
    sigma: f64,
) -> Result<LlrVector> {
    if !(sigma > 0.0) {
        return Err(Error::ZeroNoise);
    }
    check_inputs(h, y)?;
    let k = h.cols();
    check_enumerable(c.order(), k)?;
    let order = c.order();
    // best metric per (user, symbol value)
    let mut per_symbol = vec![f64::INFINITY; k * order];
    enumerate(h, y, c, |s, metric| {
        for (user, &sym) in s.iter().enumerate() {
            let slot = &mut per_symbol[user * order + sym];
            if metric < *slot {
                *slot = metric;
            }
        }
    });
    let bps = c.bits_per_symbol();
    let inv_s2 = 1.0 / (sigma * sigma);
    let mut out = vec![0.0; k * bps];
    for user in 0..k {
        for t in 0..bps {
            let mut best = [f64::INFINITY; 2];
            for sym in 0..order {
                let slot = &mut best[usize::from(c.label(sym)[t] < 0)];
                *slot = slot.min(per_symbol[user * order + sym]);
            }
            out[user * bps + t] = (best[1] - best[0]) * inv_s2;
        }
    }
    Ok(LlrVector(out))
}
