//! Bayesian polynomial regression with a conjugate Gaussian prior.
//!
//! With `θ ~ N(μ̂, Σ̂)`, features `φ(x, p) = [1, x, …, xᵖ]` and known noise σ²,
//! the parameter posterior is `N(μ̂_p, Σ̂_p)` where
//!
//! ```text
//! Σ̂_p⁻¹ = Σ̂⁻¹ + Φ̂ᵀΦ̂ / σ²
//! μ̂_p   = Σ̂_p (Σ̂⁻¹ μ̂ + Φ̂ᵀ y / σ²)
//! ```
//!
//! and the predictive distribution at `x` is Gaussian with mean `⟨φ, μ̂_p⟩` and
//! variance `σ² + φᵀ Σ̂_p φ`. Monomials are used raw; no orthogonalization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{jittered_cholesky, quad_form, spd_inverse, symmetrize};
use crate::{Error, Result};

/// `φ(x, p) = [1, x, …, xᵖ]`.
pub fn feature_map(x: f64, degree: usize) -> DVector<f64> {
    let mut phi = DVector::zeros(degree + 1);
    let mut power = 1.0;
    for i in 0..=degree {
        phi[i] = power;
        power *= x;
    }
    phi
}

/// Row-stacked features, `n × (p+1)`.
pub fn design_matrix(xs: &[f64], degree: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(xs.len(), degree + 1);
    for (r, &x) in xs.iter().enumerate() {
        m.row_mut(r).copy_from(&feature_map(x, degree).transpose());
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BprPrior {
    degree: usize,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    noise_variance: f64,
}

impl BprPrior {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, noise_variance: f64) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("prior mean must have at least one entry".into()));
        }
        if covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(Error::DimensionMismatch { context: "prior covariance", expected: dim, got: covariance.nrows() });
        }
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance must be > 0, got {noise_variance}")));
        }
        let covariance = symmetrize(&covariance);
        if nalgebra::Cholesky::new(covariance.clone()).is_none() {
            return Err(Error::InvalidArgument("prior covariance is not positive definite".into()));
        }
        Ok(Self { degree: dim - 1, mean, covariance, noise_variance })
    }

    /// `μ̂ = 0`, `Σ̂ = I`.
    pub fn standard(degree: usize, noise_variance: f64) -> Result<Self> {
        Self::new(DVector::zeros(degree + 1), DMatrix::identity(degree + 1, degree + 1), noise_variance)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn precision(&self) -> Result<DMatrix<f64>> {
        spd_inverse(&self.covariance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BprPosterior {
    degree: usize,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    noise_variance: f64,
    design: DMatrix<f64>,
    outputs: DVector<f64>,
}

impl BprPosterior {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `μ̂_p`.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// `Σ̂_p`.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// `Φ̂`, the design matrix the posterior was conditioned on.
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn outputs(&self) -> &DVector<f64> {
        &self.outputs
    }

    pub fn n_observations(&self) -> usize {
        self.outputs.len()
    }

    /// `φᵀ Σ̂_p φ`, the parameter-uncertainty part of the predictive variance.
    pub fn latent_variance(&self, x: f64) -> f64 {
        quad_form(&self.covariance, &feature_map(x, self.degree))
    }

    /// Predictive `(mean, variance)` with `variance = σ² + φᵀ Σ̂_p φ`.
    pub fn predictive(&self, x: f64) -> (f64, f64) {
        let phi = feature_map(x, self.degree);
        (phi.dot(&self.mean), self.noise_variance + quad_form(&self.covariance, &phi))
    }

    /// Reuses this posterior as the prior of a subsequent update.
    pub fn as_prior(&self) -> Result<BprPrior> {
        BprPrior::new(self.mean.clone(), self.covariance.clone(), self.noise_variance)
    }
}

/// Conjugate update of `prior` with observations `(xs, ys)`.
///
/// Empty data returns the prior unchanged.
pub fn posterior_update(prior: &BprPrior, xs: &[f64], ys: &[f64]) -> Result<BprPosterior> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { context: "bpr observations", expected: xs.len(), got: ys.len() });
    }
    let degree = prior.degree;
    let design = design_matrix(xs, degree);
    let outputs = DVector::from_column_slice(ys);
    if xs.is_empty() {
        return Ok(BprPosterior {
            degree,
            mean: prior.mean.clone(),
            covariance: prior.covariance.clone(),
            noise_variance: prior.noise_variance,
            design,
            outputs,
        });
    }
    let inv_noise = 1.0 / prior.noise_variance;
    let prior_precision = prior.precision()?;
    let precision = symmetrize(&(&prior_precision + design.tr_mul(&design) * inv_noise));
    let rhs = &prior_precision * &prior.mean + design.tr_mul(&outputs) * inv_noise;
    let (chol, _) = jittered_cholesky(&precision)?;
    let mean = chol.solve(&rhs);
    let covariance = symmetrize(&chol.inverse());
    Ok(BprPosterior { degree, mean, covariance, noise_variance: prior.noise_variance, design, outputs })
}
