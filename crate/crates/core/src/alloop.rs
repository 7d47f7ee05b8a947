//! Pool-based active-learning driver.
//!
//! One run alternates fit → evaluate → score → select → label until the
//! budget is spent. The model is refit from scratch on the full labeled set
//! at every step, so the trace never depends on update order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{score_pool, StrategySpec};
use crate::model::{FittedModel, ModelSpec};
use crate::rng::{derive_rng, purpose};
use crate::synthetic::{eval_target, observe, GroundTruthTarget, LabeledSet, TestSet, UnlabeledPool};
use crate::{Error, Result};

/// Source of labels for pool candidates.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelOracle {
    /// Noisy observations of a synthetic target. The noise for pool index `i`
    /// comes from its own stream, so a candidate's label does not depend on
    /// when (or by which strategy) it is queried.
    Synthetic { target: GroundTruthTarget, master_seed: u64, seed: u64 },
    /// Stored labels of a real dataset, indexed like the pool.
    Table(Vec<f64>),
}

impl LabelOracle {
    pub fn label(&self, index: usize, x: &[f64]) -> Result<f64> {
        match self {
            Self::Synthetic { target, master_seed, seed } => {
                if x.len() != 1 {
                    return Err(Error::Oracle(format!("synthetic targets take scalar inputs, got dimension {}", x.len())));
                }
                let mut rng = derive_rng(*master_seed, &[*seed, purpose::LABEL_NOISE, index as u64]);
                Ok(observe(target, x[0], &mut rng))
            }
            Self::Table(labels) => labels
                .get(index)
                .copied()
                .ok_or_else(|| Error::Oracle(format!("no stored label for pool index {index} ({} rows)", labels.len()))),
        }
    }

    /// Noise-free target value, when the oracle knows it.
    pub fn clean(&self, x: &[f64]) -> Option<f64> {
        match self {
            Self::Synthetic { target, .. } if x.len() == 1 => Some(eval_target(target, x[0])),
            _ => None,
        }
    }
}

/// Labeled set, remaining pool and step counter of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    labeled: LabeledSet,
    pool: UnlabeledPool,
    acquired: Vec<usize>,
    step: usize,
}

impl PoolState {
    pub fn new(labeled: LabeledSet, pool: UnlabeledPool) -> Self {
        Self { labeled, pool, acquired: Vec::new(), step: 0 }
    }

    /// Labels the given pool indices and moves them into the labeled set.
    pub fn seeded(pool: UnlabeledPool, initial: &[usize], oracle: &LabelOracle) -> Result<Self> {
        let mut state = Self::new(LabeledSet::default(), pool);
        for &index in initial {
            state.move_to_labeled(index, oracle)?;
        }
        state.acquired.clear();
        Ok(state)
    }

    fn move_to_labeled(&mut self, index: usize, oracle: &LabelOracle) -> Result<f64> {
        if index >= self.pool.len() {
            return Err(Error::InvalidArgument(format!("pool index {index} out of range ({})", self.pool.len())));
        }
        let x = self.pool.candidate(index).to_vec();
        let y = oracle.label(index, &x)?;
        self.pool.deactivate(index)?;
        self.labeled.push(x, y);
        self.acquired.push(index);
        Ok(y)
    }

    /// Queries the oracle at `index` and advances the step counter.
    pub fn acquire(&mut self, index: usize, oracle: &LabelOracle) -> Result<f64> {
        let y = self.move_to_labeled(index, oracle)?;
        self.step += 1;
        Ok(y)
    }

    pub fn labeled(&self) -> &LabeledSet {
        &self.labeled
    }

    pub fn pool(&self) -> &UnlabeledPool {
        &self.pool
    }

    /// Pool indices acquired so far, in order.
    pub fn acquired(&self) -> &[usize] {
        &self.acquired
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// `|D_L| + active(pool)`, constant over a run.
    pub fn total(&self) -> usize {
        self.labeled.len() + self.pool.n_active()
    }
}

/// Draws `k` distinct pool indices uniformly without replacement.
pub fn draw_initial<R: Rng + ?Sized>(pool_len: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k > pool_len {
        return Err(Error::BudgetExceedsPool { budget: k, available: pool_len });
    }
    Ok(rand::seq::index::sample(rng, pool_len, k).into_vec())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Against noisy observed test outputs.
    VsObserved,
    /// Against the noise-free target.
    #[default]
    VsClean,
}

/// Mean posterior-expected squared error over the test set:
/// `(target − mean)² + latent variance`, averaged over test points.
pub fn test_mse(model: &FittedModel, test: &TestSet, mode: EvalMode) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("test set is empty".into()));
    }
    let targets = match mode {
        EvalMode::VsObserved => test.observed_outputs(),
        EvalMode::VsClean => test.clean_outputs().ok_or(Error::MissingCleanOutputs)?,
    };
    let predictions = model.predict_many(test.inputs())?;
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (t - p.mean).powi(2) + p.latent_variance)
        .sum();
    Ok(total / test.len() as f64)
}

/// Bias and variance of the current model averaged over the test inputs.
///
/// Bias is taken over observation noise: the posterior mean is linear in the
/// labels, so its noise average is the mean of a model refit on the clean
/// labels `f(X_L)`. Variance is the latent posterior variance.
pub fn bias_variance(
    spec: &ModelSpec,
    labeled: &LabeledSet,
    oracle: &LabelOracle,
    model: &FittedModel,
    test: &TestSet,
) -> Result<(f64, f64)> {
    let clean_labels = labeled
        .inputs()
        .iter()
        .map(|x| oracle.clean(x).ok_or_else(|| Error::Oracle("decomposition needs a noise-free target".into())))
        .collect::<Result<Vec<_>>>()?;
    let clean_model = spec.fit(labeled.inputs(), &clean_labels)?;
    let truth = test.clean_outputs().ok_or(Error::MissingCleanOutputs)?;
    let clean_pred = clean_model.predict_many(test.inputs())?;
    let pred = model.predict_many(test.inputs())?;
    let n = test.len() as f64;
    let bias = clean_pred.iter().zip(truth).map(|(p, t)| (p.mean - t).powi(2)).sum::<f64>() / n;
    let variance = pred.iter().map(|p| p.latent_variance).sum::<f64>() / n;
    Ok((bias, variance))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub eval_mode: EvalMode,
    /// Record the bias/variance split at every step (synthetic targets only).
    pub decompose: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub n_labeled: usize,
    /// Input queried at this step; `None` at step 0.
    pub chosen_x: Option<Vec<f64>>,
    pub chosen_index: Option<usize>,
    pub test_mse: f64,
    pub bias: Option<f64>,
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub model_id: String,
    pub strategy_id: String,
    pub records: Vec<StepRecord>,
    /// True once the budget has been spent.
    pub terminal: bool,
}

impl RunTrace {
    pub fn final_mse(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.test_mse)
    }

    pub fn mse_at(&self, step: usize) -> Option<f64> {
        self.records.get(step).map(|r| r.test_mse)
    }
}

/// Runs `budget` acquisitions and records the model after each one.
///
/// Step 0 describes the model fit on the initial labeled set. `rng` is only
/// consumed by the random strategy.
#[allow(clippy::too_many_arguments)]
pub fn run_al<R: Rng + ?Sized>(
    model: &ModelSpec,
    strategy: &StrategySpec,
    oracle: &LabelOracle,
    mut state: PoolState,
    test: &TestSet,
    budget: usize,
    rng: &mut R,
    options: RunOptions,
) -> Result<RunTrace> {
    strategy.validate()?;
    if state.labeled().is_empty() {
        return Err(Error::InvalidArgument("initial labeled set must be nonempty".into()));
    }
    if budget > state.pool().n_active() {
        return Err(Error::BudgetExceedsPool { budget, available: state.pool().n_active() });
    }
    let mut records = Vec::with_capacity(budget + 1);
    let mut chosen: Option<usize> = None;
    loop {
        let fitted = model.fit(state.labeled().inputs(), state.labeled().outputs())?;
        let mse = test_mse(&fitted, test, options.eval_mode)?;
        if !mse.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite test MSE at step {}", state.step())));
        }
        let (bias, variance) = if options.decompose {
            let (b, v) = bias_variance(model, state.labeled(), oracle, &fitted, test)?;
            (Some(b), Some(v))
        } else {
            (None, None)
        };
        records.push(StepRecord {
            step: state.step(),
            n_labeled: state.labeled().len(),
            chosen_x: chosen.map(|i| state.pool().candidate(i).to_vec()),
            chosen_index: chosen,
            test_mse: mse,
            bias,
            variance,
        });
        if state.step() == budget {
            break;
        }
        let scored = score_pool(strategy, &fitted, state.labeled(), state.pool(), rng)?;
        log::trace!("step {} picks pool index {}", state.step(), scored.chosen_index);
        state.acquire(scored.chosen_index, oracle)?;
        chosen = Some(scored.chosen_index);
    }
    Ok(RunTrace { model_id: model.id(), strategy_id: strategy.id().to_string(), records, terminal: true })
}
