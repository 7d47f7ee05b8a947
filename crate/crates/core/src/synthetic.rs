//! Synthetic ground-truth targets, observations, candidate pools and test sets.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    PurePolynomial,
    PolynomialPlusCosine,
}

/// `f(x) = Σ wᵢ xⁱ + a·cos(2π·ν·x)` observed under Gaussian noise of variance σ².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTarget {
    kind: TargetKind,
    coefficients: Vec<f64>,
    cosine_amplitude: f64,
    cosine_frequency: f64,
    noise_variance: f64,
}

impl GroundTruthTarget {
    pub fn new(
        kind: TargetKind,
        coefficients: Vec<f64>,
        cosine_amplitude: f64,
        cosine_frequency: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidArgument("a target needs at least one coefficient".into()));
        }
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {noise_variance}")));
        }
        if kind == TargetKind::PurePolynomial && cosine_amplitude != 0.0 {
            return Err(Error::InvalidArgument("pure polynomial targets have no cosine component".into()));
        }
        Ok(Self { kind, coefficients, cosine_amplitude, cosine_frequency, noise_variance })
    }

    /// Pure polynomial target with the given coefficients (lowest order first).
    pub fn polynomial(coefficients: Vec<f64>, noise_variance: f64) -> Result<Self> {
        Self::new(TargetKind::PurePolynomial, coefficients, 0.0, 0.0, noise_variance)
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn cosine_amplitude(&self) -> f64 {
        self.cosine_amplitude
    }

    pub fn cosine_frequency(&self) -> f64 {
        self.cosine_frequency
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn with_noise_variance(mut self, noise_variance: f64) -> Result<Self> {
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {noise_variance}")));
        }
        self.noise_variance = noise_variance;
        Ok(self)
    }

    pub fn with_cosine(mut self, amplitude: f64, frequency: f64) -> Self {
        self.kind = TargetKind::PolynomialPlusCosine;
        self.cosine_amplitude = amplitude;
        self.cosine_frequency = frequency;
        self
    }

    fn polynomial_value(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &w| acc * x + w)
    }

    fn polynomial_slope(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &w)| acc * x + i as f64 * w)
    }

    /// Upper bound on `|f'(x)|` over `[lo, hi]`.
    ///
    /// The polynomial slope is maximized over a dense grid (exact for orders
    /// up to two since the extremes then sit at the endpoints); the cosine
    /// contributes `2π·|a|·|ν|`. The sum is rounded up to an integer.
    pub fn gradient_bound(&self, lo: f64, hi: f64) -> f64 {
        const GRID: usize = 10_001;
        let poly_max = (0..GRID)
            .map(|i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
            .map(|x| self.polynomial_slope(x).abs())
            .fold(0.0, f64::max);
        let cos_max = 2.0 * PI * self.cosine_amplitude.abs() * self.cosine_frequency.abs();
        (poly_max + cos_max).ceil()
    }
}

/// Draws a target of the given order with `w ~ N(0, I)` and σ² = 1.
///
/// The cosine variant uses amplitude 1 and frequency 1, i.e. `cos(2πx)`.
pub fn sample_target<R: Rng + ?Sized>(order: usize, rng: &mut R, kind: TargetKind) -> GroundTruthTarget {
    let coefficients: Vec<f64> = (0..=order).map(|_| rng.sample(StandardNormal)).collect();
    let (amplitude, frequency) = match kind {
        TargetKind::PurePolynomial => (0.0, 0.0),
        TargetKind::PolynomialPlusCosine => (1.0, 1.0),
    };
    GroundTruthTarget { kind, coefficients, cosine_amplitude: amplitude, cosine_frequency: frequency, noise_variance: 1.0 }
}

/// Noiseless value `f(x)`.
pub fn eval_target(target: &GroundTruthTarget, x: f64) -> f64 {
    let mut value = target.polynomial_value(x);
    if target.cosine_amplitude != 0.0 {
        value += target.cosine_amplitude * (2.0 * PI * target.cosine_frequency * x).cos();
    }
    value
}

/// Noisy observation `f(x) + ε`, `ε ~ N(0, σ²)`.
pub fn observe<R: Rng + ?Sized>(target: &GroundTruthTarget, x: f64, rng: &mut R) -> f64 {
    let clean = eval_target(target, x);
    if target.noise_variance == 0.0 {
        return clean;
    }
    let noise = Normal::new(0.0, target.noise_variance.sqrt()).expect("validated noise variance");
    clean + noise.sample(rng)
}

/// Labeled data `D_L`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl LabeledSet {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::DimensionMismatch { context: "labeled set", expected: inputs.len(), got: outputs.len() });
        }
        Ok(Self { inputs, outputs })
    }

    pub fn push(&mut self, input: Vec<f64>, output: f64) {
        self.inputs.push(input);
        self.outputs.push(output);
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Unlabeled candidates `D_U` with an activity mask.
///
/// Deactivation is permanent: once a candidate is queried it never returns.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledPool {
    candidates: Vec<Vec<f64>>,
    active: Vec<bool>,
}

impl UnlabeledPool {
    pub fn from_candidates(candidates: Vec<Vec<f64>>) -> Self {
        let active = vec![true; candidates.len()];
        Self { candidates, active }
    }

    pub fn candidates(&self) -> &[Vec<f64>] {
        &self.candidates
    }

    pub fn candidate(&self, index: usize) -> &[f64] {
        &self.candidates[index]
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.active.get(index).copied().unwrap_or(false)
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Active candidate indices in increasing order.
    pub fn active_indices(&self) -> Vec<usize> {
        self.active.iter().enumerate().filter_map(|(i, &a)| a.then_some(i)).collect()
    }

    pub fn deactivate(&mut self, index: usize) -> Result<()> {
        match self.active.get_mut(index) {
            Some(slot) if *slot => {
                *slot = false;
                Ok(())
            }
            Some(_) => Err(Error::InvalidArgument(format!("candidate {index} is already inactive"))),
            None => Err(Error::InvalidArgument(format!("candidate {index} out of range"))),
        }
    }
}

/// `n` evenly spaced 1-D candidates on `[lo, hi]`, both endpoints included.
pub fn build_pool(n: usize, lo: f64, hi: f64) -> Result<UnlabeledPool> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("pool needs at least 2 points, got {n}")));
    }
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("pool interval [{lo}, {hi}] is empty")));
    }
    Ok(UnlabeledPool::from_candidates(grid(n, lo, hi).into_iter().map(|x| vec![x]).collect()))
}

fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
}

/// Holdout data. `clean_outputs` is only known for synthetic targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    inputs: Vec<Vec<f64>>,
    observed_outputs: Vec<f64>,
    clean_outputs: Option<Vec<f64>>,
}

impl TestSet {
    pub fn new(inputs: Vec<Vec<f64>>, observed_outputs: Vec<f64>, clean_outputs: Option<Vec<f64>>) -> Result<Self> {
        if inputs.len() != observed_outputs.len() {
            return Err(Error::DimensionMismatch { context: "test set outputs", expected: inputs.len(), got: observed_outputs.len() });
        }
        if let Some(clean) = &clean_outputs {
            if clean.len() != inputs.len() {
                return Err(Error::DimensionMismatch { context: "test set clean outputs", expected: inputs.len(), got: clean.len() });
            }
        }
        Ok(Self { inputs, observed_outputs, clean_outputs })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn observed_outputs(&self) -> &[f64] {
        &self.observed_outputs
    }

    pub fn clean_outputs(&self) -> Option<&[f64]> {
        self.clean_outputs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestLayout {
    #[default]
    Random,
    Grid,
}

/// Holdout set of `n` inputs on `[lo, hi]`, uniform-random by default.
pub fn build_test_set<R: Rng + ?Sized>(
    n: usize,
    lo: f64,
    hi: f64,
    target: &GroundTruthTarget,
    rng: &mut R,
) -> Result<TestSet> {
    build_test_set_with_layout(n, lo, hi, target, TestLayout::Random, rng)
}

pub fn build_test_set_with_layout<R: Rng + ?Sized>(
    n: usize,
    lo: f64,
    hi: f64,
    target: &GroundTruthTarget,
    layout: TestLayout,
    rng: &mut R,
) -> Result<TestSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("test set needs at least one point".into()));
    }
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!("test interval [{lo}, {hi}] is empty")));
    }
    let xs: Vec<f64> = match layout {
        TestLayout::Random => (0..n).map(|_| rng.random_range(lo..=hi)).collect(),
        TestLayout::Grid if n == 1 => vec![0.5 * (lo + hi)],
        TestLayout::Grid => grid(n, lo, hi),
    };
    let clean: Vec<f64> = xs.iter().map(|&x| eval_target(target, x)).collect();
    let observed: Vec<f64> = xs.iter().map(|&x| observe(target, x, rng)).collect();
    TestSet::new(xs.into_iter().map(|x| vec![x]).collect(), observed, Some(clean))
}
