use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Probability that the transmitted vector falls outside the searched set,
/// `1 - prod_l (1 - exp(-delta_d |R_ll|^2 / sigma^2))`.
pub fn exclusion_probability_bound(r: &CMatrix, sigma: f64, delta_d: f64) -> Result<f64> {
    if r.rows() != r.cols() {
        return Err(Error::DimensionMismatch(format!(
            "R must be square, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::ZeroNoise);
    }
    if !(delta_d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta_d must be positive, got {delta_d}"
        )));
    }
    let sigma2 = sigma * sigma;
    let mut keep = 1.0;
    for l in 0..r.rows() {
        let r2 = r[(l, l)].norm_sqr();
        if r2 == 0.0 {
            return Err(Error::RankDeficient(l));
        }
        keep *= 1.0 - (-delta_d * r2 / sigma2).exp();
    }
    Ok((1.0 - keep).clamp(0.0, 1.0))
}

/// Pruning slack `(N_C + 1) / 8 * d_qam^2`.
pub fn default_delta_d(c: &Constellation, n_c: usize) -> Result<f64> {
    if n_c == 0 {
        return Err(Error::InvalidParameter("n_c must be at least 1".into()));
    }
    Ok((n_c as f64 + 1.0) / 8.0 * c.d_qam().powi(2))
}
