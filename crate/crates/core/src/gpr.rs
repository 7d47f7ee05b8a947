//! Gaussian-process regression.
//!
//! For training data `(X, y)`, prior mean `m` and kernel `k`, the latent
//! posterior at `x` is
//!
//! ```text
//! m_D(x)  = m(x) + k*ᵀ (K + σ²I)⁻¹ (y − m)
//! σ²_D(x) = k(x, x) − k*ᵀ (K + σ²I)⁻¹ k*
//! ```
//!
//! `K + σ²I` is factored once per fit; hyperparameters are fixed by the caller.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::linalg::jittered_cholesky;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `σ_b² + σ_w² ⟨x, x′⟩`
    Linear { bias: f64, weight: f64 },
    /// `σ_f² exp(−r² / 2ℓ²)`
    Rbf { amplitude: f64, lengthscale: f64 },
    /// Matérn ν = 5/2: `σ_f² (1 + √5 r/ℓ + 5r²/3ℓ²) exp(−√5 r/ℓ)`
    Matern52 { amplitude: f64, lengthscale: f64 },
}

impl KernelSpec {
    pub fn linear(bias: f64, weight: f64) -> Self {
        Self::Linear { bias, weight }
    }

    pub fn rbf(amplitude: f64, lengthscale: f64) -> Self {
        Self::Rbf { amplitude, lengthscale }
    }

    pub fn matern52(amplitude: f64, lengthscale: f64) -> Self {
        Self::Matern52 { amplitude, lengthscale }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear { .. } => "linear",
            Self::Rbf { .. } => "rbf",
            Self::Matern52 { .. } => "matern52",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Linear { bias, weight } => bias >= 0.0 && weight > 0.0 && bias.is_finite() && weight.is_finite(),
            Self::Rbf { amplitude, lengthscale } | Self::Matern52 { amplitude, lengthscale } => {
                amplitude > 0.0 && lengthscale > 0.0 && amplitude.is_finite() && lengthscale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid kernel parameters: {self:?}")))
        }
    }

    /// Same kernel with a different lengthscale; linear kernels are returned as is.
    pub fn with_lengthscale(self, lengthscale: f64) -> Self {
        match self {
            Self::Linear { .. } => self,
            Self::Rbf { amplitude, .. } => Self::Rbf { amplitude, lengthscale },
            Self::Matern52 { amplitude, .. } => Self::Matern52 { amplitude, lengthscale },
        }
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Self::Linear { bias, weight } => bias + weight * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>(),
            Self::Rbf { amplitude, lengthscale } => {
                let r2 = squared_distance(x, y);
                amplitude * (-r2 / (2.0 * lengthscale * lengthscale)).exp()
            }
            Self::Matern52 { amplitude, lengthscale } => {
                let s = 5f64.sqrt() * squared_distance(x, y).sqrt() / lengthscale;
                amplitude * (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `k(x, x′)`.
pub fn kernel_eval(kernel: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { context: "kernel inputs", expected: x.len(), got: y.len() });
    }
    Ok(kernel.eval_unchecked(x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanFn {
    #[default]
    Zero,
    Constant(f64),
}

impl MeanFn {
    pub fn value(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant(c) => c,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelSpec,
    mean: MeanFn,
    inputs: Vec<Vec<f64>>,
    chol: Option<Cholesky<f64, Dyn>>,
    weights: DVector<f64>,
    noise_variance: f64,
}

impl GpModel {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn mean_fn(&self) -> MeanFn {
        self.mean
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// `α = (K + σ²I)⁻¹ (y − m)`.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    fn input_dim(&self) -> Option<usize> {
        self.inputs.first().map(Vec::len)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.input_dim() {
            Some(d) if d != x.len() => Err(Error::DimensionMismatch { context: "gp query", expected: d, got: x.len() }),
            _ => Ok(()),
        }
    }

    /// Latent posterior `(m_D(x), σ²_D(x))` for a batch of queries.
    pub fn latent_many(&self, queries: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        for q in queries {
            self.check_dim(q)?;
        }
        let prior_mean = self.mean.value();
        let Some(chol) = &self.chol else {
            return Ok(queries.iter().map(|q| (prior_mean, self.kernel.eval_unchecked(q, q))).collect());
        };
        let n = self.inputs.len();
        let cross = DMatrix::from_fn(n, queries.len(), |i, j| self.kernel.eval_unchecked(&self.inputs[i], &queries[j]));
        let means = cross.tr_mul(&self.weights);
        let solved = chol.l_dirty().solve_lower_triangular(&cross).expect("cholesky factor is invertible");
        Ok(queries
            .iter()
            .enumerate()
            .map(|(j, q)| {
                let reduction = solved.column(j).norm_squared();
                let var = (self.kernel.eval_unchecked(q, q) - reduction).max(0.0);
                (prior_mean + means[j], var)
            })
            .collect())
    }

    /// `log p(y | X)` under the fitted hyperparameters.
    pub fn log_marginal_likelihood(&self, outputs: &[f64]) -> Result<f64> {
        let Some(chol) = &self.chol else { return Ok(0.0) };
        if outputs.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch { context: "gp outputs", expected: self.inputs.len(), got: outputs.len() });
        }
        let centered = DVector::from_iterator(outputs.len(), outputs.iter().map(|y| y - self.mean.value()));
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let n = outputs.len() as f64;
        Ok(-0.5 * centered.dot(&self.weights) - 0.5 * log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln())
    }
}

/// Factors `K + σ²I` and solves for the weights. Refits from scratch.
pub fn gp_fit(kernel: &KernelSpec, mean: MeanFn, xs: &[Vec<f64>], ys: &[f64], noise_variance: f64) -> Result<GpModel> {
    kernel.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { context: "gp observations", expected: xs.len(), got: ys.len() });
    }
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {noise_variance}")));
    }
    if let Some(first) = xs.first() {
        if let Some(bad) = xs.iter().find(|x| x.len() != first.len()) {
            return Err(Error::DimensionMismatch { context: "gp inputs", expected: first.len(), got: bad.len() });
        }
    }
    if xs.is_empty() {
        return Ok(GpModel { kernel: *kernel, mean, inputs: Vec::new(), chol: None, weights: DVector::zeros(0), noise_variance });
    }
    let n = xs.len();
    let gram = DMatrix::from_fn(n, n, |i, j| {
        kernel.eval_unchecked(&xs[i], &xs[j]) + if i == j { noise_variance } else { 0.0 }
    });
    let (chol, _) = jittered_cholesky(&gram)?;
    let centered = DVector::from_iterator(n, ys.iter().map(|y| y - mean.value()));
    let weights = chol.solve(&centered);
    Ok(GpModel { kernel: *kernel, mean, inputs: xs.to_vec(), chol: Some(chol), weights, noise_variance })
}

/// Posterior `(mean, variance)` at `x`; `include_noise` adds σ² to the variance.
pub fn gp_predict(model: &GpModel, x: &[f64], include_noise: bool) -> Result<(f64, f64)> {
    let (m, v) = model.latent_many(std::slice::from_ref(&x.to_vec()))?[0];
    Ok((m, if include_noise { v + model.noise_variance } else { v }))
}

/// Picks the lengthscale from `grid` with the highest marginal likelihood
/// on `(xs, ys)`. Ties keep the earliest grid entry.
pub fn select_lengthscale(
    kernel: &KernelSpec,
    mean: MeanFn,
    xs: &[Vec<f64>],
    ys: &[f64],
    noise_variance: f64,
    grid: &[f64],
) -> Result<KernelSpec> {
    let mut best: Option<(f64, KernelSpec)> = None;
    for &ell in grid {
        let candidate = kernel.with_lengthscale(ell);
        let lml = gp_fit(&candidate, mean, xs, ys, noise_variance)?.log_marginal_likelihood(ys)?;
        if best.as_ref().is_none_or(|(b, _)| lml > *b) {
            best = Some((lml, candidate));
        }
    }
    best.map(|(_, k)| k).ok_or_else(|| Error::InvalidArgument("empty lengthscale grid".into()))
}
