//! Small dense linear-algebra helpers shared by the regression models.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Smallest relative jitter tried after a failed factorization.
pub const JITTER_START: f64 = 1e-10;
/// Largest relative jitter before giving up.
pub const JITTER_MAX: f64 = 1e-6;

/// Cholesky factorization with bounded diagonal jitter.
///
/// On failure, `eps * trace/dim * I` is added for `eps = 1e-10, 1e-9, ..., 1e-6`.
/// Returns the factor and the absolute jitter that was applied (0 if none).
pub fn jittered_cholesky(matrix: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let dim = matrix.nrows();
    if let Some(chol) = Cholesky::new(matrix.clone()) {
        return Ok((chol, 0.0));
    }
    let scale = if dim == 0 { 1.0 } else { (matrix.trace() / dim as f64).abs().max(f64::MIN_POSITIVE) };
    let mut eps = JITTER_START;
    while eps <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = eps * scale;
        let mut shifted = matrix.clone();
        for i in 0..dim {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            log::debug!("cholesky needed jitter {jitter:e} on a {dim}x{dim} matrix");
            return Ok((chol, jitter));
        }
        eps *= 10.0;
    }
    Err(Error::Factorization { dim, max_jitter: JITTER_MAX * scale })
}

/// Returns `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Evaluates the quadratic form `vᵀ A v`.
pub fn quad_form(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(a * v))
}

/// Inverse of a symmetric positive-definite matrix via Cholesky, symmetrized.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (chol, _) = jittered_cholesky(m)?;
    Ok(symmetrize(&chol.inverse()))
}
