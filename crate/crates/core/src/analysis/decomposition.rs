use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::mse::{closed_form_terms, TargetFamily};
use crate::bpr::{design_matrix, feature_map, posterior_update, BprPrior};
use crate::linalg::jittered_cholesky;
use crate::{Error, Result};

const BATCHES: usize = 10;
const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMethod {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub x: f64,
    pub mse: f64,
    pub bias: f64,
    pub variance: f64,
    pub method: DecompositionMethod,
    pub sample_count: Option<usize>,
    /// Batch standard error of the bias estimate (Monte-Carlo only).
    pub bias_std_error: Option<f64>,
}

/// Closed-form split of the expected MSE into posterior variance `φᵀΣ̂_pφ`
/// and the remainder.
pub fn closed_form_report(x: f64, family: &TargetFamily, prior: &BprPrior, xs: &[f64]) -> Result<DecompositionReport> {
    let terms = closed_form_terms(x, family, prior, &design_matrix(xs, family.order()), &design_matrix(xs, prior.degree()))?;
    let variance = terms.variance();
    let mse = terms.total();
    Ok(DecompositionReport {
        x,
        mse,
        bias: (mse - variance).max(0.0),
        variance,
        method: DecompositionMethod::ClosedForm,
        sample_count: None,
        bias_std_error: None,
    })
}

/// Monte-Carlo bias/variance split at `x`.
///
/// Each sample draws `w ~ N(μ, Σ)` and `n_train` inputs uniform on
/// `[−2, 2]`. Bias is averaged over observation noise: the posterior mean is
/// linear in the labels, so the noise-averaged prediction is that of a
/// posterior formed on the clean labels `Φw`. Variance is `φᵀΣ̂_pφ`, exact
/// for each sampled design. `mse = bias + variance` by construction.
pub fn mc_bias_variance<R: Rng + ?Sized>(
    x: f64,
    family: &TargetFamily,
    prior: &BprPrior,
    n_train: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<DecompositionReport> {
    if n_mc < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} Monte-Carlo samples, got {n_mc}")));
    }
    let l = family.order();
    let chol_l = jittered_cholesky(family.covariance())?.0.l();
    let phi_l = feature_map(x, l);
    let per_batch = n_mc.div_ceil(BATCHES);
    let mut batch_bias = Vec::with_capacity(BATCHES);
    let mut bias_sum = 0.0;
    let mut var_sum = 0.0;
    let mut done = 0;
    while done < n_mc {
        let size = per_batch.min(n_mc - done);
        let mut b_acc = 0.0;
        for _ in 0..size {
            let z = DVector::from_fn(l + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let w = family.mean() + &chol_l * z;
            let xs: Vec<f64> = (0..n_train).map(|_| rng.random_range(-2.0..=2.0)).collect();
            let clean = design_matrix(&xs, l) * &w;
            let post = posterior_update(prior, &xs, clean.as_slice())?;
            let (mean, _) = post.predictive(x);
            b_acc += (mean - phi_l.dot(&w)).powi(2);
            var_sum += post.latent_variance(x);
        }
        bias_sum += b_acc;
        batch_bias.push(b_acc / size as f64);
        done += size;
    }
    let bias = bias_sum / n_mc as f64;
    let variance = var_sum / n_mc as f64;
    let k = batch_bias.len() as f64;
    let batch_mean = batch_bias.iter().sum::<f64>() / k;
    let batch_var = batch_bias.iter().map(|b| (b - batch_mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(DecompositionReport {
        x,
        mse: bias + variance,
        bias,
        variance,
        method: DecompositionMethod::MonteCarlo,
        sample_count: Some(n_mc),
        bias_std_error: Some((batch_var / k).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;

    #[test]
    fn empty_data_bias_is_prior_spread() {
        // E_w[(φᵀw)²] with μ = 0 is φᵀΣφ; the posterior variance is the same quantity exactly.
        let fam = TargetFamily::random(2, 1.0, &mut derive_rng(1, &[])).unwrap();
        let fam = TargetFamily::new(DVector::zeros(3), fam.covariance().clone(), 1.0).unwrap();
        let prior = fam.matched_prior();
        let x = 0.8;
        let phi = feature_map(x, 2);
        let expected = phi.dot(&(fam.covariance() * &phi));
        let r = mc_bias_variance(x, &fam, &prior, 0, 20_000, &mut derive_rng(2, &[])).unwrap();
        assert!((r.variance - expected).abs() < 1e-12);
        let se = r.bias_std_error.unwrap();
        assert!((r.bias - expected).abs() < 4.0 * se, "{} vs {expected} (se {se})", r.bias);
        assert_eq!(r.mse - r.bias - r.variance, 0.0);
    }

    #[test]
    fn matched_bias_vanishes_with_data() {
        let fam = TargetFamily::standard(3, 1.0).unwrap();
        for p in [3, 4] {
            let prior = BprPrior::standard(p, 1.0).unwrap();
            let r = mc_bias_variance(0.0, &fam, &prior, 200, 1000, &mut derive_rng(3, &[p as u64])).unwrap();
            assert!(r.bias < 0.05 * r.variance, "p {p}: bias {} variance {}", r.bias, r.variance);
        }
    }

    #[test]
    fn rejects_too_few_samples() {
        let fam = TargetFamily::standard(1, 1.0).unwrap();
        assert!(mc_bias_variance(0.0, &fam, &fam.matched_prior(), 3, 999, &mut derive_rng(0, &[])).is_err());
    }

    #[test]
    fn closed_form_report_splits_total() {
        let fam = TargetFamily::standard(3, 1.0).unwrap();
        let prior = BprPrior::standard(1, 1.0).unwrap();
        let r = closed_form_report(0.5, &fam, &prior, &[-1.0, 0.2, 1.5]).unwrap();
        assert!(r.bias > 0.0 && r.variance > 0.0);
        assert!((r.bias + r.variance - r.mse).abs() < 1e-12);
    }
}
