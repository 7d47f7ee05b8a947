//! A common face for the two predictive model families.

use serde::{Deserialize, Serialize};

use crate::bpr::{posterior_update, BprPosterior, BprPrior};
use crate::gpr::{gp_fit, GpModel, KernelSpec, MeanFn};
use crate::{Error, Result};

/// Predictive summary at one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Parameter (BPR) or function (GP) uncertainty, without observation noise.
    pub latent_variance: f64,
    pub noise_variance: f64,
}

impl Prediction {
    /// Posterior predictive variance including observation noise.
    pub fn predictive_variance(&self) -> f64 {
        self.latent_variance + self.noise_variance
    }
}

/// How to build a model from labeled data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Bpr(BprPrior),
    Gpr { kernel: KernelSpec, mean: MeanFn, noise_variance: f64 },
}

impl ModelSpec {
    /// Stable identifier used in traces and file names.
    pub fn id(&self) -> String {
        match self {
            Self::Bpr(prior) => format!("bpr_p{}", prior.degree()),
            Self::Gpr { kernel, .. } => format!("gpr_{}", kernel.name()),
        }
    }

    pub fn noise_variance(&self) -> f64 {
        match self {
            Self::Bpr(prior) => prior.noise_variance(),
            Self::Gpr { noise_variance, .. } => *noise_variance,
        }
    }

    pub fn fit(&self, inputs: &[Vec<f64>], outputs: &[f64]) -> Result<FittedModel> {
        match self {
            Self::Bpr(prior) => {
                let xs = scalar_inputs(inputs)?;
                Ok(FittedModel::Bpr(posterior_update(prior, &xs, outputs)?))
            }
            Self::Gpr { kernel, mean, noise_variance } => {
                Ok(FittedModel::Gpr(gp_fit(kernel, *mean, inputs, outputs, *noise_variance)?))
            }
        }
    }
}

fn scalar_inputs(inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    inputs
        .iter()
        .map(|x| match x.as_slice() {
            [v] => Ok(*v),
            other => Err(Error::DimensionMismatch { context: "bpr input", expected: 1, got: other.len() }),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum FittedModel {
    Bpr(BprPosterior),
    Gpr(GpModel),
}

impl FittedModel {
    pub fn noise_variance(&self) -> f64 {
        match self {
            Self::Bpr(p) => p.noise_variance(),
            Self::Gpr(g) => g.noise_variance(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        Ok(self.predict_many(std::slice::from_ref(&x.to_vec()))?[0])
    }

    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        match self {
            Self::Bpr(post) => {
                let noise_variance = post.noise_variance();
                scalar_inputs(xs)?
                    .into_iter()
                    .map(|x| {
                        let (mean, var) = post.predictive(x);
                        Ok(Prediction { mean, latent_variance: var - noise_variance, noise_variance })
                    })
                    .collect()
            }
            Self::Gpr(gp) => {
                let noise_variance = gp.noise_variance();
                Ok(gp
                    .latent_many(xs)?
                    .into_iter()
                    .map(|(mean, latent_variance)| Prediction { mean, latent_variance, noise_variance })
                    .collect())
            }
        }
    }
}
