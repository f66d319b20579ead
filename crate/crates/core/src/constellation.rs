//! Square QAM with per-axis Gray labels, slicing, geometric neighbor
//! ordering and the region rule that sets how many children a node gets.
//!
//! Points are indexed `i * side + q` where `i` and `q` are the in-phase and
//! quadrature level indices, level `0` being the most negative. Labels are
//! bipolar: Gray bit `0` maps to `+1` and bit `1` to `-1`, in-phase bits
//! first.

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Index of a point in [`Constellation::points`].
pub type SymbolIndex = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    side: usize,
    bits_per_axis: usize,
    /// Half the nearest-neighbor spacing; levels are odd multiples of it.
    unit: f64,
    inv_unit: f64,
    points: Vec<C64>,
    labels: Vec<i8>,
    axis_levels: Vec<f64>,
    energies: Vec<f64>,
}

/// Up to four points closest to an observation, in the zigzag order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborOrdering {
    symbols: [SymbolIndex; 4],
    count: usize,
}

impl NeighborOrdering {
    pub(crate) fn single(s: SymbolIndex) -> Self {
        Self {
            symbols: [s; 4],
            count: 1,
        }
    }

    pub fn as_slice(&self) -> &[SymbolIndex] {
        &self.symbols[..self.count]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, j: usize) -> SymbolIndex {
        self.symbols[j]
    }
}

#[inline]
fn sign(x: f64) -> isize {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

impl Constellation {
    /// Unit average energy square QAM of the given order (4, 16 or 64).
    pub fn build_qam(order: usize) -> Result<Self> {
        let side: usize = match order {
            4 => 2,
            16 => 4,
            64 => 8,
            _ => return Err(Error::UnsupportedOrder(order)),
        };
        let bits_per_axis = side.trailing_zeros() as usize;
        let unit = 1.0 / (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let axis_levels: Vec<f64> = (0..side)
            .map(|i| (2.0 * i as f64 - (side as f64 - 1.0)) * unit)
            .collect();
        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order * 2 * bits_per_axis);
        for i in 0..side {
            for q in 0..side {
                points.push(C64::new(axis_levels[i], axis_levels[q]));
                for g in [gray(i), gray(q)] {
                    for b in (0..bits_per_axis).rev() {
                        labels.push(if (g >> b) & 1 == 0 { 1 } else { -1 });
                    }
                }
            }
        }
        let energies = points.iter().map(|p| p.norm_sqr()).collect();
        Ok(Self {
            order,
            side,
            bits_per_axis,
            unit,
            inv_unit: 1.0 / unit,
            points,
            labels,
            axis_levels,
            energies,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    /// Nearest-neighbor spacing.
    pub fn d_qam(&self) -> f64 {
        2.0 * self.unit
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    #[inline]
    pub fn point(&self, s: SymbolIndex) -> C64 {
        self.points[s]
    }

    /// `|s|^2`, precomputed.
    #[inline]
    pub fn energy_of(&self, s: SymbolIndex) -> f64 {
        self.energies[s]
    }

    /// Average symbol energy (one by construction).
    pub fn average_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.order as f64
    }

    pub fn axis_levels(&self) -> &[f64] {
        &self.axis_levels
    }

    /// Bipolar label of a point, in-phase bits first.
    #[inline]
    pub fn label(&self, s: SymbolIndex) -> &[i8] {
        let b = self.bits_per_symbol();
        &self.labels[s * b..(s + 1) * b]
    }

    /// Point carrying the given bipolar label.
    pub fn map_label(&self, bits: &[i8]) -> Result<SymbolIndex> {
        let b = self.bits_per_symbol();
        if bits.len() != b {
            return Err(Error::LengthMismatch {
                expected: b,
                got: bits.len(),
            });
        }
        let axis = |chunk: &[i8]| -> Result<usize> {
            let mut g = 0usize;
            for &v in chunk {
                g = (g << 1)
                    | match v {
                        1 => 0,
                        -1 => 1,
                        _ => {
                            return Err(Error::InvalidParameter(format!(
                                "bipolar bit must be +1 or -1, got {v}"
                            )))
                        }
                    };
            }
            // inverse Gray
            let mut i = g;
            let mut shift = g >> 1;
            while shift != 0 {
                i ^= shift;
                shift >>= 1;
            }
            Ok(i)
        };
        let i = axis(&bits[..self.bits_per_axis])?;
        let q = axis(&bits[self.bits_per_axis..])?;
        Ok(i * self.side + q)
    }

    #[inline]
    fn axis_index(&self, x: f64) -> usize {
        // levels sit at odd integers of v; decision boundaries at even ones
        let top = (self.side - 1) as f64;
        let u = (x * self.inv_unit + top) * 0.5;
        let lo = u.floor();
        let frac = u - lo;
        let pick = if frac > 0.5 {
            lo + 1.0
        } else if frac < 0.5 {
            lo
        } else {
            // exactly on a boundary: prefer the level nearer zero, and the
            // positive one at the origin
            let below = 2.0 * lo - top;
            if below.abs() < (below + 2.0).abs() {
                lo
            } else {
                lo + 1.0
            }
        };
        pick.clamp(0.0, top) as usize
    }

    /// Nearest point, by per-axis rounding with clipping at the edges.
    #[inline]
    pub fn slice_index(&self, y: C64) -> SymbolIndex {
        self.axis_index(y.re) * self.side + self.axis_index(y.im)
    }

    pub fn slice(&self, y: C64) -> C64 {
        self.point(self.slice_index(y))
    }

    /// Index of `p` if it is (to rounding) a point of the constellation.
    pub fn index_of(&self, p: C64) -> Option<SymbolIndex> {
        let s = self.slice_index(p);
        ((self.point(s) - p).norm() <= 1e-9 * self.unit).then_some(s)
    }

    #[inline]
    fn step(&self, s: SymbolIndex, di: isize, dq: isize) -> SymbolIndex {
        let top = self.side as isize - 1;
        let i = (s / self.side) as isize + di;
        let q = (s % self.side) as isize + dq;
        i.clamp(0, top) as usize * self.side + q.clamp(0, top) as usize
    }

    #[inline]
    fn has_step(&self, s: SymbolIndex, di: isize, dq: isize) -> bool {
        self.step(s, di, dq) != s
    }

    /// Zigzag ordering of the (up to) four closest points around `s1`, which
    /// must be the slice of `y`. Stepped points that clip at the edge onto an
    /// earlier entry are dropped.
    pub fn order_neighbors_index(&self, y: C64, s1: SymbolIndex) -> NeighborOrdering {
        let off = y - self.point(s1);
        let (si, sq) = (sign(off.re), sign(off.im));
        let horizontal = self.step(s1, si, 0);
        let vertical = self.step(s1, 0, sq);
        let (second, third) = if off.re.abs() > off.im.abs() {
            (horizontal, vertical)
        } else {
            (vertical, horizontal)
        };
        let diagonal = self.step(s1, si, sq);
        let mut out = NeighborOrdering::single(s1);
        for cand in [second, third, diagonal] {
            if !out.as_slice().contains(&cand) {
                out.symbols[out.count] = cand;
                out.count += 1;
            }
        }
        out
    }

    pub fn order_neighbors(&self, y: C64, s1: C64) -> Result<NeighborOrdering> {
        let s = self
            .index_of(s1)
            .ok_or_else(|| Error::NotAConstellationPoint(format!("{s1}")))?;
        Ok(self.order_neighbors_index(y, s))
    }

    /// Number of closest points worth expanding for an observation `y` sliced
    /// to `s1`: one inside the central square of half-width `threshold`, two
    /// when exactly one axis offset exceeds it, four when both do. An axis
    /// only counts when a neighbor exists in the direction of the offset.
    /// Capped at `min(n_c, 4)`.
    pub fn jmax_region_index(&self, y: C64, s1: SymbolIndex, n_c: usize, threshold: f64) -> usize {
        let off = y - self.point(s1);
        let re_open = off.re.abs() > threshold && self.has_step(s1, sign(off.re), 0);
        let im_open = off.im.abs() > threshold && self.has_step(s1, 0, sign(off.im));
        let j = match (re_open, im_open) {
            (false, false) => 1,
            (true, true) => 4,
            _ => 2,
        };
        j.min(n_c.min(4)).max(1)
    }

    pub fn jmax_region(&self, y: C64, s1: C64, n_c: usize, threshold: f64) -> Result<usize> {
        let s = self
            .index_of(s1)
            .ok_or_else(|| Error::NotAConstellationPoint(format!("{s1}")))?;
        Ok(self.jmax_region_index(y, s, n_c, threshold))
    }

    /// Default half-width of the reliable central square, an eighth of the
    /// spacing.
    pub fn default_region_threshold(&self) -> f64 {
        self.d_qam() / 8.0
    }
}
