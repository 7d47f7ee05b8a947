use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bpr::{design_matrix, feature_map, BprPosterior, BprPrior};
use crate::linalg::{jittered_cholesky, symmetrize};
use crate::{Error, Result};

/// Polynomial targets of order `l` with weights `w ~ N(μ, Σ)` and noise `σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFamily {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    noise_variance: f64,
}

impl TargetFamily {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, noise_variance: f64) -> Result<Self> {
        // Same validation as a prior: lengths agree, Σ SPD, σ² > 0.
        let as_prior = BprPrior::new(mean, covariance, noise_variance)?;
        Ok(Self {
            mean: as_prior.mean().clone(),
            covariance: as_prior.covariance().clone(),
            noise_variance,
        })
    }

    /// `μ = 0`, `Σ = I`.
    pub fn standard(order: usize, noise_variance: f64) -> Result<Self> {
        Self::new(DVector::zeros(order + 1), DMatrix::identity(order + 1, order + 1), noise_variance)
    }

    /// Random family: `μ_i ~ N(0, 0.5²)`, `Σ = AAᵀ/(l+1) + 0.1 I` with standard-normal `A`.
    pub fn random<R: Rng + ?Sized>(order: usize, noise_variance: f64, rng: &mut R) -> Result<Self> {
        let d = order + 1;
        let mean = DVector::from_fn(d, |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal));
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = &a * a.transpose() / d as f64 + DMatrix::identity(d, d) * 0.1;
        Self::new(mean, symmetrize(&cov), noise_variance)
    }

    pub fn order(&self) -> usize {
        self.mean.len() - 1
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

    /// The prior that matches this family exactly.
    pub fn matched_prior(&self) -> BprPrior {
        BprPrior::new(self.mean.clone(), self.covariance.clone(), self.noise_variance).expect("validated on construction")
    }

    /// `E[w wᵀ] = Σ + μμᵀ`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        &self.covariance + &self.mean * self.mean.transpose()
    }
}

/// The nine terms of the closed-form expected MSE at one input.
///
/// With `v = Σ̂_p φ^p`, `a = vᵀΣ̂⁻¹μ̂` and `M = Σ + μμᵀ`:
///
/// ```text
/// t1 =  φ^lᵀ M φ^l                    t6 = (1/σ²) (vᵀΦ̂ᵀΦμ)(μ̂ᵀΣ̂⁻¹v)
/// t2 = −2 a μᵀφ^l                     t7 = (1/σ⁴) (ΦᵀΦ̂v)ᵀ M (ΦᵀΦ̂v)
/// t3 = −(2/σ²) vᵀΦ̂ᵀΦ M φ^l            t8 = (1/σ²) ‖Φ̂v‖²
/// t4 =  a²                            t9 = vᵀφ^p
/// t5 = (1/σ²) a (μᵀΦᵀΦ̂v)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseTerms(pub [f64; 9]);

impl MseTerms {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// The posterior-variance term `φᵀΣ̂_pφ`.
    pub fn variance(&self) -> f64 {
        self.0[8]
    }
}

struct Posterior {
    /// Σ̂_p φ^p
    v: DVector<f64>,
    /// Σ̂⁻¹ v
    prior_prec_v: DVector<f64>,
}

fn check_shapes(family: &TargetFamily, prior: &BprPrior, phi: &DMatrix<f64>, phi_hat: &DMatrix<f64>) -> Result<()> {
    let l = family.order();
    let p = prior.degree();
    if phi.ncols() != l + 1 {
        return Err(Error::DimensionMismatch { context: "target-order design columns", expected: l + 1, got: phi.ncols() });
    }
    if phi_hat.ncols() != p + 1 {
        return Err(Error::DimensionMismatch { context: "model-order design columns", expected: p + 1, got: phi_hat.ncols() });
    }
    if phi.nrows() != phi_hat.nrows() {
        return Err(Error::DimensionMismatch { context: "design rows", expected: phi.nrows(), got: phi_hat.nrows() });
    }
    Ok(())
}

fn posterior_solve(prior: &BprPrior, phi_hat: &DMatrix<f64>, phi_p: &DVector<f64>) -> Result<Posterior> {
    let s2 = prior.noise_variance();
    let prior_chol = jittered_cholesky(prior.covariance())?.0;
    let prior_prec = prior_chol.inverse();
    let prec = symmetrize(&(&prior_prec + phi_hat.transpose() * phi_hat / s2));
    let v = jittered_cholesky(&prec)?.0.solve(phi_p);
    let prior_prec_v = prior_chol.solve(&v);
    Ok(Posterior { v, prior_prec_v })
}

/// All nine closed-form terms at `x`.
///
/// `phi` is the target-order design on the labeled inputs, `phi_hat` the
/// model-order design on the same inputs. The prior's `σ²` is both the model
/// noise and the true noise; it must equal the family's.
pub fn closed_form_terms(
    x: f64,
    family: &TargetFamily,
    prior: &BprPrior,
    phi: &DMatrix<f64>,
    phi_hat: &DMatrix<f64>,
) -> Result<MseTerms> {
    check_shapes(family, prior, phi, phi_hat)?;
    let s2 = prior.noise_variance();
    if (s2 - family.noise_variance()).abs() > 1e-12 * s2.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "model noise {s2} differs from target noise {}",
            family.noise_variance()
        )));
    }
    let phi_l = feature_map(x, family.order());
    let phi_p = feature_map(x, prior.degree());
    let mu = family.mean();
    let m = family.second_moment();
    let post = posterior_solve(prior, phi_hat, &phi_p)?;
    let v = &post.v;

    let a = post.prior_prec_v.dot(prior.mean());
    let u = phi.transpose() * (phi_hat * v); // ΦᵀΦ̂v
    let m_phi_l = &m * &phi_l;
    let hat_v = phi_hat * v;

    let t1 = phi_l.dot(&m_phi_l);
    let t2 = -2.0 * a * mu.dot(&phi_l);
    let t3 = -2.0 / s2 * u.dot(&m_phi_l);
    let t4 = a * a;
    let t5 = a * mu.dot(&u) / s2;
    let t6 = u.dot(mu) * a / s2;
    let t7 = u.dot(&(&m * &u)) / (s2 * s2);
    let t8 = hat_v.norm_squared() / s2;
    let t9 = v.dot(&phi_p);
    Ok(MseTerms([t1, t2, t3, t4, t5, t6, t7, t8, t9]))
}

/// Closed-form expected MSE at `x` (sum of [`closed_form_terms`]).
pub fn closed_form_mse(
    x: f64,
    family: &TargetFamily,
    prior: &BprPrior,
    phi: &DMatrix<f64>,
    phi_hat: &DMatrix<f64>,
) -> Result<f64> {
    Ok(closed_form_terms(x, family, prior, phi, phi_hat)?.total())
}

/// `2 φᵀΣ̂_pφ`, the expected MSE when model and target family coincide.
pub fn matched_mse(x: f64, posterior: &BprPosterior) -> f64 {
    2.0 * posterior.latent_variance(x)
}

/// `|MSE(x) − 2(σ_p²(x) − σ²)|` for a model trained on inputs `xs`.
pub fn fig5_discrepancy(x: f64, family: &TargetFamily, prior: &BprPrior, xs: &[f64]) -> Result<f64> {
    let phi = design_matrix(xs, family.order());
    let phi_hat = design_matrix(xs, prior.degree());
    let terms = closed_form_terms(x, family, prior, &phi, &phi_hat)?;
    Ok((terms.total() - 2.0 * terms.variance()).abs())
}

/// Target-order objects split into the model-order block (powers `0..=p`)
/// and the complement (powers `p+1..=l`).
#[derive(Debug, Clone, PartialEq)]
pub struct LowerOrderPartition {
    degree: usize,
    /// Φ̃_c: n × (l−p)
    phi_c: DMatrix<f64>,
    /// Φ̂: n × (p+1)
    phi_hat: DMatrix<f64>,
    /// μ̃_c: l−p
    mu_c: DVector<f64>,
    /// μ̃: p+1
    mu_tilde: DVector<f64>,
    /// Σ̃_c: (l−p) × (l−p)
    sigma_c: DMatrix<f64>,
    /// Σ₁₂: (l−p) × (p+1)
    sigma_12: DMatrix<f64>,
    /// Σ̃: (p+1) × (p+1)
    sigma_tilde: DMatrix<f64>,
    noise_variance: f64,
}

impl LowerOrderPartition {
    pub fn new(family: &TargetFamily, xs: &[f64], degree: usize) -> Result<Self> {
        let l = family.order();
        if degree > l {
            return Err(Error::InvalidArgument(format!("model degree {degree} exceeds target order {l}")));
        }
        let k = l - degree;
        let q = degree + 1;
        let phi = design_matrix(xs, l);
        let mu = family.mean();
        let sigma = family.covariance();
        Ok(Self {
            degree,
            phi_c: phi.columns(q, k).into_owned(),
            phi_hat: phi.columns(0, q).into_owned(),
            mu_c: mu.rows(q, k).into_owned(),
            mu_tilde: mu.rows(0, q).into_owned(),
            sigma_c: sigma.view((q, q), (k, k)).into_owned(),
            sigma_12: sigma.view((q, 0), (k, q)).into_owned(),
            sigma_tilde: sigma.view((0, 0), (q, q)).into_owned(),
            noise_variance: family.noise_variance(),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.degree + self.mu_c.len()
    }

    pub fn phi_hat(&self) -> &DMatrix<f64> {
        &self.phi_hat
    }

    pub fn phi_c(&self) -> &DMatrix<f64> {
        &self.phi_c
    }

    pub fn sigma_12(&self) -> &DMatrix<f64> {
        &self.sigma_12
    }

    /// The prior satisfying the partition's assumption `μ̂ = μ̃`, `Σ̂ = Σ̃`.
    pub fn assumed_prior(&self) -> BprPrior {
        BprPrior::new(self.mu_tilde.clone(), self.sigma_tilde.clone(), self.noise_variance).expect("principal block of an SPD matrix")
    }

    /// Reassembles `(Φ, μ, Σ)` in natural power order.
    pub fn reassemble(&self) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let q = self.degree + 1;
        let k = self.mu_c.len();
        let d = q + k;
        let n = self.phi_hat.nrows();
        let mut phi = DMatrix::zeros(n, d);
        phi.columns_mut(0, q).copy_from(&self.phi_hat);
        phi.columns_mut(q, k).copy_from(&self.phi_c);
        let mut mu = DVector::zeros(d);
        mu.rows_mut(0, q).copy_from(&self.mu_tilde);
        mu.rows_mut(q, k).copy_from(&self.mu_c);
        let mut sigma = DMatrix::zeros(d, d);
        sigma.view_mut((0, 0), (q, q)).copy_from(&self.sigma_tilde);
        sigma.view_mut((q, q), (k, k)).copy_from(&self.sigma_c);
        sigma.view_mut((q, 0), (k, q)).copy_from(&self.sigma_12);
        sigma.view_mut((0, q), (q, k)).copy_from(&self.sigma_12.transpose());
        (phi, mu, sigma)
    }

    /// Splits `φ(x, l)` into `(φ̃_c, φ^p)`.
    pub fn split_features(&self, x: f64) -> (DVector<f64>, DVector<f64>) {
        let full = feature_map(x, self.order());
        let q = self.degree + 1;
        (full.rows(q, full.len() - q).into_owned(), full.rows(0, q).into_owned())
    }
}

/// Lower-order MSE split into `P(x)` and `Var(x)`; `total = P + 2·Var`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerOrderMse {
    pub total: f64,
    pub p_term: f64,
    pub var_term: f64,
    /// The six terms in order: five making up `P(x)` and `2·Var(x)`.
    pub terms: [f64; 6],
}

/// Block-form MSE of a degree-`p` model against an order-`l` family.
///
/// With `v = Σ̂_pφ^p`, `r = Φ̃_cᵀΦ̂v/σ²` and `M_c = Σ̃_c + μ̃_cμ̃_cᵀ`:
///
/// ```text
/// P(x) =  φ̃_cᵀ M_c φ̃_c − 2 rᵀ M_c φ̃_c + 2 vᵀΣ̂⁻¹Σ₁₂ᵀφ̃_c
///        + rᵀ M_c r     − 2 rᵀ Σ₁₂ Σ̂⁻¹ v
/// Var(x) = vᵀφ^p
/// ```
///
/// Valid only when the prior equals the model-order blocks of the family;
/// any entry differing by more than `1e-12` is an assumption violation.
pub fn lower_order_mse(x: f64, partition: &LowerOrderPartition, prior: &BprPrior, noise_variance: f64) -> Result<LowerOrderMse> {
    if prior.degree() != partition.degree {
        return Err(Error::DimensionMismatch { context: "prior degree", expected: partition.degree, got: prior.degree() });
    }
    let mean_gap = (prior.mean() - &partition.mu_tilde).amax();
    let cov_gap = (prior.covariance() - &partition.sigma_tilde).amax();
    if mean_gap > 1e-12 || cov_gap > 1e-12 {
        return Err(Error::AssumptionViolation(format!(
            "prior differs from the family's model-order blocks (mean by {mean_gap:e}, covariance by {cov_gap:e})"
        )));
    }
    let posterior_prior = BprPrior::new(prior.mean().clone(), prior.covariance().clone(), noise_variance)?;
    let (phi_c, phi_p) = partition.split_features(x);
    let post = posterior_solve(&posterior_prior, &partition.phi_hat, &phi_p)?;
    let v = &post.v;
    let r = partition.phi_c.transpose() * (&partition.phi_hat * v) / noise_variance;
    let m_c = &partition.sigma_c + &partition.mu_c * partition.mu_c.transpose();
    let m_c_phi = &m_c * &phi_c;
    let s12_g = &partition.sigma_12 * &post.prior_prec_v; // Σ₁₂ Σ̂⁻¹ v

    let t1 = phi_c.dot(&m_c_phi);
    let t2 = -2.0 * r.dot(&m_c_phi);
    let t3 = 2.0 * s12_g.dot(&phi_c);
    let t4 = r.dot(&(&m_c * &r));
    let t5 = -2.0 * r.dot(&s12_g);
    let var_term = v.dot(&phi_p);
    let t6 = 2.0 * var_term;
    let p_term = t1 + t2 + t3 + t4 + t5;
    Ok(LowerOrderMse { total: p_term + t6, p_term, var_term, terms: [t1, t2, t3, t4, t5, t6] })
}
