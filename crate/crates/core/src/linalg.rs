//! Dense complex matrices and the Tikhonov-regularized QR factorization.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::complexity::{ComplexityReport, Phase, CMUL};
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = Vec<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = ONE;
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut out = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            out[(i, i)] = d;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> CVector {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<CVector> {
        if self.cols != x.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} minus {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &CMatrix) -> Result<CMatrix> {
        if self.cols != below.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} columns over {}",
                self.cols, below.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(Self {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        })
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> CMatrix {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Copy of the matrix without column `c`.
    pub fn without_column(&self, c: usize) -> CMatrix {
        Self::from_fn(self.rows, self.cols - 1, |r, j| {
            self[(r, if j < c { j } else { j + 1 })]
        })
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

pub(crate) fn all_finite(v: &[C64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Thin Householder QR of a tall matrix `a` (rows >= cols).
///
/// Returns `(q, r)` with `q` of the same shape as `a` having orthonormal
/// columns and `r` square upper triangular with a real, strictly positive
/// diagonal.
pub fn householder_qr(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let (n, k) = (a.rows(), a.cols());
    if n < k {
        return Err(Error::Underdetermined { m: n, k });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut work = a.clone();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut diag = Vec::with_capacity(k);

    for j in 0..k {
        let norm = (j..n).map(|r| work[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-14 * scale {
            return Err(Error::RankDeficient(j));
        }
        let x0 = work[(j, j)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm;
        // v = x - alpha e1, normalized
        let mut v: Vec<C64> = (j..n).map(|r| work[(r, j)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        for c in j..k {
            let w: C64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * work[(j + i, c)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                work[(j + i, c)] -= 2.0 * vi * w;
            }
        }
        diag.push(alpha);
        reflectors.push(v);
    }

    // Thin Q = H_0 H_1 ... H_{k-1} [I; 0]
    let mut q = CMatrix::zeros(n, k);
    for i in 0..k {
        q[(i, i)] = ONE;
    }
    for (j, v) in reflectors.iter().enumerate().rev() {
        for c in 0..k {
            let w: C64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * q[(j + i, c)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                q[(j + i, c)] -= 2.0 * vi * w;
            }
        }
    }

    let mut r = CMatrix::from_fn(k, k, |i, c| if c >= i { work[(i, c)] } else { ZERO });
    // Rotate so that diag(R) is real positive: R <- D^* R, Q <- Q D.
    for (j, alpha) in diag.iter().enumerate() {
        let p = alpha / alpha.norm();
        for c in j..k {
            r[(j, c)] *= p.conj();
        }
        r[(j, j)] = C64::new(alpha.norm(), 0.0);
        for row in 0..n {
            q[(row, j)] *= p;
        }
    }
    Ok((q, r))
}

/// Output of [`regularized_qr`]: the top `M x K` block of the orthonormal
/// factor of `[H; lambda I]`, the triangular factor and `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors {
    pub q: CMatrix,
    pub r: CMatrix,
    pub lambda: f64,
}

impl QrFactors {
    pub fn m(&self) -> usize {
        self.q.rows()
    }

    pub fn k(&self) -> usize {
        self.r.cols()
    }

    /// `R_ll`, real and positive.
    #[inline]
    pub fn r_diag(&self, l: usize) -> f64 {
        self.r[(l, l)].re
    }
}

/// Factor `[H; lambda I_K] = [Q; Q2] R` with `lambda = sigma / symbol_energy`.
///
/// `Q2` is dropped; only the `M x K` block multiplying the received vector is
/// kept.
pub fn regularized_qr(h: &CMatrix, sigma: f64, symbol_energy: f64) -> Result<QrFactors> {
    let (m, k) = (h.rows(), h.cols());
    if m < k {
        return Err(Error::Underdetermined { m, k });
    }
    if k == 0 {
        return Err(Error::DimensionMismatch("channel has no columns".into()));
    }
    if !h.is_finite() || !sigma.is_finite() || !symbol_energy.is_finite() {
        return Err(Error::NonFinite);
    }
    if sigma < 0.0 || symbol_energy <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need sigma >= 0 and symbol energy > 0, got {sigma} and {symbol_energy}"
        )));
    }
    let lambda = sigma / symbol_energy;
    let stacked = h.vstack(&CMatrix::from_diagonal(&vec![C64::new(lambda, 0.0); k]))?;
    let (q_bar, r) = householder_qr(&stacked)?;
    Ok(QrFactors {
        q: q_bar.row_block(0, m),
        r,
        lambda,
    })
}

/// `Q^H y`, charging `4MK` real multiplications to the matched-filter phase.
pub fn matched_observable(q: &CMatrix, y: &[C64], ops: &mut ComplexityReport) -> Result<CVector> {
    let (m, k) = (q.rows(), q.cols());
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "Q has {m} rows but y has {} entries",
            y.len()
        )));
    }
    let mut out = vec![ZERO; k];
    for (r, &yr) in y.iter().enumerate() {
        for (c, o) in out.iter_mut().enumerate() {
            *o += q[(r, c)].conj() * yr;
        }
    }
    ops.charge(Phase::MatchedFilter, CMUL * (m * k) as u64);
    Ok(out)
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
pub fn hpd_inverse(a: &CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            n,
            a.cols()
        )));
    }
    let tol = 1e-13 * (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
    // a = L L^H
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for p in 0..j {
            d -= l[(j, p)].norm_sqr();
        }
        if !(d > tol) {
            return Err(Error::Singular);
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    // L^{-1} by forward substitution, then a^{-1} = L^{-H} L^{-1}
    let mut linv = CMatrix::zeros(n, n);
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { ONE } else { ZERO };
            for p in c..i {
                s -= l[(i, p)] * linv[(p, c)];
            }
            linv[(i, c)] = s / l[(i, i)];
        }
    }
    linv.adjoint().matmul(&linv)
}
