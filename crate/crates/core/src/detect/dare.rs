//! Sort-free breadth-limited tree detection with approximate reliability
//! estimation.
//!
//! The search walks the triangular tree from the last layer to the first.
//! At each layer every surviving parent is interference-cancelled and
//! sliced, the region of the observation inside the slicing cell decides how
//! many of its closest points (at most four) may become children, and the
//! children are swept child-rank-major across parents against a single
//! threshold `min(d) + delta_d R_ll^2 / sigma^2` until `N_C` are accepted.
//! Nothing is ever sorted. Bit reliabilities come from metric gaps between
//! the best survivor and the best survivor disagreeing on each bit.

use crate::complexity::{ComplexityReport, Phase, CMUL, CNORM, CSCALE};
use crate::constellation::{Constellation, NeighborOrdering, SymbolIndex};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, matched_observable, QrFactors, C64, ZERO};

use super::bound::default_delta_d;
use super::LlrVector;

/// Default LLR magnitude ceiling.
pub const DEFAULT_LLR_CLAMP: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DareConfig {
    /// Maximum number of surviving candidates per layer.
    pub n_c: usize,
    /// Pruning slack.
    pub delta_d: f64,
    /// LLR magnitude ceiling, also used for bits without a counter-hypothesis.
    pub llr_clamp: f64,
    /// Half-width of the central square of a slicing cell inside which a
    /// node gets a single child.
    pub region_threshold: f64,
}

impl DareConfig {
    /// Defaults for `c`: slack from [`default_delta_d`], clamp
    /// [`DEFAULT_LLR_CLAMP`], region threshold `d_qam / 8`.
    pub fn new(c: &Constellation, n_c: usize) -> Result<Self> {
        Ok(Self {
            n_c,
            delta_d: default_delta_d(c, n_c)?,
            llr_clamp: DEFAULT_LLR_CLAMP,
            region_threshold: c.default_region_threshold(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 {
            return Err(Error::InvalidParameter("n_c must be at least 1".into()));
        }
        if !(self.delta_d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_d must be positive, got {}",
                self.delta_d
            )));
        }
        if !(self.llr_clamp > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "llr_clamp must be positive, got {}",
                self.llr_clamp
            )));
        }
        if !(self.region_threshold >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "region_threshold must be non-negative, got {}",
                self.region_threshold
            )));
        }
        Ok(())
    }
}

/// Surviving full-length candidates after the last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    k: usize,
    bits: usize,
    symbols: Vec<SymbolIndex>,
    metrics: Vec<f64>,
    labels: Vec<i8>,
}

impl CandidateList {
    /// Number of candidates.
    pub fn active(&self) -> usize {
        self.metrics.len()
    }

    /// Symbol indices of candidate `n`, one per user.
    pub fn symbols(&self, n: usize) -> &[SymbolIndex] {
        &self.symbols[n * self.k..(n + 1) * self.k]
    }

    pub fn metrics(&self) -> &[f64] {
        &self.metrics
    }

    /// Bipolar bit label of candidate `n`.
    pub fn label(&self, n: usize) -> &[i8] {
        &self.labels[n * self.bits..(n + 1) * self.bits]
    }

    /// Index of the smallest metric (first one on ties).
    pub fn best(&self) -> usize {
        let mut best = 0;
        for (n, &m) in self.metrics.iter().enumerate() {
            if m < self.metrics[best] {
                best = n;
            }
        }
        best
    }

    pub fn contains(&self, symbols: &[SymbolIndex]) -> bool {
        (0..self.active()).any(|n| self.symbols(n) == symbols)
    }
}

#[derive(Debug, Clone)]
pub struct DareOutput {
    pub llrs: LlrVector,
    pub candidates: CandidateList,
    pub report: ComplexityReport,
}

/// Per-layer constants derived from the factorization and noise level.
struct Layer {
    inv_r: f64,
    /// `R_ll^2 / sigma^2`
    gain: f64,
    /// `delta_d R_ll^2 / sigma^2`
    slack: f64,
}

/// Run the detector on one received vector.
pub fn dare_detect(
    qr: &QrFactors,
    y: &[C64],
    c: &Constellation,
    sigma: f64,
    cfg: &DareConfig,
) -> Result<DareOutput> {
    cfg.validate()?;
    if !(sigma > 0.0) {
        return Err(Error::ZeroNoise);
    }
    if !all_finite(y) {
        return Err(Error::NonFinite);
    }
    let k = qr.k();
    let n_c = cfg.n_c;
    let bps = c.bits_per_symbol();
    let mut ops = ComplexityReport::default();

    let y_tilde = matched_observable(&qr.q, y, &mut ops)?;

    let inv_s2 = 1.0 / (sigma * sigma);
    let lam_s2 = qr.lambda * qr.lambda * inv_s2;
    let layers: Vec<Layer> = (0..k)
        .map(|l| {
            let r = qr.r_diag(l);
            Layer {
                inv_r: 1.0 / r,
                gain: r * r * inv_s2,
                slack: cfg.delta_d * r * r * inv_s2,
            }
        })
        .collect();

    // One metric evaluation: |yhat - s|^2 scaled by R^2/sigma^2 (2 + 1)
    // minus the tabulated |s|^2 scaled by lambda^2/sigma^2 (1).
    let branch = |yhat: C64, s: SymbolIndex, gain: f64, ops: &mut ComplexityReport| -> f64 {
        ops.charge(Phase::LayerMetrics, CNORM + 2);
        (yhat - c.point(s)).norm_sqr() * gain - lam_s2 * c.energy_of(s)
    };

    // Column-major K x N_C buffers; column n holds candidate n.
    let mut syms = vec![0 as SymbolIndex; k * n_c];
    let mut next_syms = vec![0 as SymbolIndex; k * n_c];
    let mut d = vec![0.0; n_c];
    let mut next_d = vec![0.0; n_c];
    let mut active = 1usize;

    let mut yhat = vec![ZERO; n_c];
    let mut order = vec![NeighborOrdering::single(0); n_c];
    let mut jmax = vec![0usize; n_c];
    let mut child = vec![0usize; n_c];
    let mut first = vec![0.0; n_c];
    let mut pending = vec![0.0; n_c];
    let mut exhausted = vec![false; n_c];

    for l in (0..k).rev() {
        let layer = &layers[l];
        for n in 0..active {
            let col = &syms[n * k..(n + 1) * k];
            let mut acc = y_tilde[l];
            for j in l + 1..k {
                acc -= qr.r[(l, j)] * c.point(col[j]);
            }
            let yh = acc * layer.inv_r;
            let s1 = c.slice_index(yh);
            ops.charge(
                Phase::Misc,
                CMUL * (k - 1 - l) as u64 + CSCALE + 2, // cancel, normalize, slice
            );
            yhat[n] = yh;
            order[n] = c.order_neighbors_index(yh, s1);
            jmax[n] = c
                .jmax_region_index(yh, s1, n_c, cfg.region_threshold)
                .min(order[n].len());
            child[n] = 0;
            exhausted[n] = false;
            first[n] = branch(yh, s1, layer.gain, &mut ops) + d[n];
            pending[n] = first[n];
        }

        let threshold = d[..active].iter().copied().fold(f64::INFINITY, f64::min) + layer.slack;
        ops.charge(Phase::LayerMetrics, 1);

        let widest = jmax[..active].iter().copied().max().unwrap_or(1);
        let mut accepted = 0usize;
        'sweep: for _rank in 0..widest {
            for n in 0..active {
                if accepted == n_c {
                    break 'sweep;
                }
                if exhausted[n] || !(pending[n] < threshold) {
                    continue;
                }
                let dst = &mut next_syms[accepted * k..(accepted + 1) * k];
                dst.copy_from_slice(&syms[n * k..(n + 1) * k]);
                dst[l] = order[n].get(child[n]);
                next_d[accepted] = pending[n];
                accepted += 1;
                if child[n] + 1 < jmax[n] {
                    child[n] += 1;
                    pending[n] =
                        branch(yhat[n], order[n].get(child[n]), layer.gain, &mut ops) + d[n];
                } else {
                    exhausted[n] = true;
                }
            }
        }

        if accepted > 0 {
            active = accepted;
            std::mem::swap(&mut syms, &mut next_syms);
            std::mem::swap(&mut d, &mut next_d);
        } else {
            // nothing passed: keep every parent, extended by its first child
            for n in 0..active {
                syms[n * k + l] = order[n].get(0);
                d[n] = first[n];
            }
        }
    }

    let bits = k * bps;
    let mut labels = Vec::with_capacity(bits * active);
    for n in 0..active {
        for &s in &syms[n * k..(n + 1) * k] {
            labels.extend_from_slice(c.label(s));
        }
    }
    syms.truncate(k * active);
    d.truncate(active);
    let candidates = CandidateList {
        k,
        bits,
        symbols: syms,
        metrics: d,
        labels,
    };

    let best = candidates.best();
    let d1 = candidates.metrics[best];
    let x1 = candidates.label(best).to_vec();
    let mut llrs = vec![0.0; bits];
    for (b, out) in llrs.iter_mut().enumerate() {
        let mut d_min = f64::INFINITY;
        for n in 0..active {
            if candidates.label(n)[b] != x1[b] && candidates.metrics[n] < d_min {
                d_min = candidates.metrics[n];
            }
        }
        let magnitude = (d_min - d1).min(cfg.llr_clamp);
        *out = f64::from(x1[b]) * magnitude;
    }

    Ok(DareOutput {
        llrs: LlrVector(llrs),
        candidates,
        report: ops,
    })
}
