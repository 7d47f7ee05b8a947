//! Seed-parallel execution of an experiment configuration.

use std::path::Path;

use rayon::prelude::*;
use ual_core::alloop::{draw_initial, run_al, LabelOracle, PoolState, RunOptions, RunTrace};
use ual_core::analysis::{fig5_discrepancy, TargetFamily};
use ual_core::bpr::BprPrior;
use ual_core::datasets::{load_csv, split, DatasetSchema, Standardizer, TabularDataset};
use ual_core::rng::{derive_rng, purpose};
use ual_core::synthetic::{build_pool, build_test_set_with_layout, sample_target, GroundTruthTarget, TargetKind, TestSet, UnlabeledPool};

use crate::aggregate::{summarize, AggregateResults, DiscrepancyRow};
use crate::config::{DatasetTarget, ExperimentConfig, ExperimentKind, ModelConfig, SyntheticTarget, TargetConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("seed {seed}, model {model}, strategy {strategy}: {source}")]
    Run { seed: u64, model: String, strategy: String, source: ual_core::Error },
    #[error("seed {seed}: {source}")]
    Setup { seed: u64, source: ual_core::Error },
    #[error("loading dataset: {0}")]
    Dataset(ual_core::Error),
    #[error("thread pool: {0}")]
    Threads(String),
}

/// One (seed, model, strategy) trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: RunTrace,
}

/// Everything a seed needs: pool, labels, test set and initial indices.
struct World {
    pool: UnlabeledPool,
    oracle: LabelOracle,
    test: TestSet,
    init: Vec<usize>,
    target: Option<GroundTruthTarget>,
}

/// Runs of one seed plus the standardizer fitted on its training split.
type SeedOutput = (Vec<SeedRun>, Option<Standardizer>);

fn synthetic_target(t: &SyntheticTarget, master: u64, seed: u64) -> ual_core::Result<GroundTruthTarget> {
    let mut target = sample_target(t.order, &mut derive_rng(master, &[seed, purpose::TARGET]), t.kind);
    if t.kind == TargetKind::PolynomialPlusCosine {
        target = target.with_cosine(t.cosine_amplitude, t.cosine_frequency);
    }
    target.with_noise_variance(t.noise_variance)
}

fn synthetic_world(cfg: &ExperimentConfig, t: &SyntheticTarget, seed: u64) -> ual_core::Result<World> {
    let master = cfg.master_seed;
    let pool_cfg = cfg.pool.as_ref().expect("validated");
    let test_cfg = cfg.test.as_ref().expect("validated");
    let target = synthetic_target(t, master, seed)?;
    let pool = build_pool(pool_cfg.size, pool_cfg.low, pool_cfg.high)?;
    let test = build_test_set_with_layout(
        test_cfg.size,
        pool_cfg.low,
        pool_cfg.high,
        &target,
        test_cfg.layout,
        &mut derive_rng(master, &[seed, purpose::TEST]),
    )?;
    let init = draw_initial(pool.len(), cfg.init_size, &mut derive_rng(master, &[seed, purpose::INIT]))?;
    let oracle = LabelOracle::Synthetic { target: target.clone(), master_seed: master, seed };
    Ok(World { pool, oracle, test, init, target: Some(target) })
}

/// A parsed dataset and the number of malformed rows skipped while reading it.
pub struct LoadedDataset {
    pub data: TabularDataset,
    pub dropped_rows: usize,
}

pub fn load_dataset(d: &DatasetTarget, base: Option<&Path>) -> ual_core::Result<LoadedDataset> {
    let schema = match DatasetSchema::builtin(&d.schema) {
        Ok(s) => s,
        Err(_) => DatasetSchema::from_json_file(&resolve(base, Path::new(&d.schema)))?,
    };
    let report = load_csv(&resolve(base, &d.path), &schema)?;
    Ok(LoadedDataset { data: report.dataset, dropped_rows: report.dropped_rows })
}

fn resolve(base: Option<&Path>, p: &Path) -> std::path::PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

fn dataset_world(cfg: &ExperimentConfig, d: &DatasetTarget, data: &TabularDataset, seed: u64) -> ual_core::Result<(World, Standardizer)> {
    let master = cfg.master_seed;
    let (train, test) = split(data, d.test_fraction, d.subsample, &mut derive_rng(master, &[seed, purpose::SPLIT]))?;
    let st = Standardizer::fit(&train)?;
    let (train, test) = (st.apply(&train), st.apply(&test));
    let pool = UnlabeledPool::from_candidates(train.features);
    let init = draw_initial(pool.len(), cfg.init_size, &mut derive_rng(master, &[seed, purpose::INIT]))?;
    let test = TestSet::new(test.features, test.targets, None)?;
    Ok((World { pool, oracle: LabelOracle::Table(train.targets), test, init, target: None }, st))
}

fn run_seed(cfg: &ExperimentConfig, world: &World, seed: u64) -> Result<Vec<SeedRun>, RunError> {
    let options = RunOptions { eval_mode: cfg.eval_mode(), decompose: cfg.decompose };
    let state = PoolState::seeded(world.pool.clone(), &world.init, &world.oracle).map_err(|source| RunError::Setup { seed, source })?;
    let mut out = Vec::with_capacity(cfg.models.len() * cfg.strategies.len());
    for model in &cfg.models {
        let model_id = model.id();
        for strategy in &cfg.strategies {
            let err = |source| RunError::Run { seed, model: model_id.clone(), strategy: strategy.id().to_string(), source };
            let spec = model.spec().map_err(err)?;
            let strategy_spec = strategy.resolve(world.target.as_ref(), cfg.pool.as_ref()).map_err(err)?;
            let mut rng = derive_rng(cfg.master_seed, &[seed, purpose::RANDOM_STRATEGY]);
            let mut trace = run_al(&spec, &strategy_spec, &world.oracle, state.clone(), &world.test, cfg.budget, &mut rng, options)
                .map_err(err)?;
            trace.model_id = model_id.clone();
            out.push(SeedRun { seed, trace });
        }
    }
    Ok(out)
}

fn discrepancy_seed(cfg: &ExperimentConfig, t: &SyntheticTarget, seed: u64) -> Result<Vec<Vec<f64>>, RunError> {
    let setup = |source| RunError::Setup { seed, source };
    let pool_cfg = cfg.pool.as_ref().expect("validated");
    let d = cfg.discrepancy.as_ref().expect("validated");
    let family = TargetFamily::standard(t.order, t.noise_variance).map_err(setup)?;
    let pool = build_pool(pool_cfg.size, pool_cfg.low, pool_cfg.high).map_err(setup)?;
    let idx = draw_initial(pool.len(), d.n_train, &mut derive_rng(cfg.master_seed, &[seed, purpose::DESIGN])).map_err(setup)?;
    let xs: Vec<f64> = idx.iter().map(|&i| pool.candidate(i)[0]).collect();
    let grid = discrepancy_grid(cfg);
    cfg.models
        .iter()
        .map(|m| {
            let ModelConfig::Bpr { degree, noise_variance, .. } = m else { unreachable!("validated") };
            let err = |source| RunError::Run { seed, model: m.id(), strategy: "none".into(), source };
            let prior = BprPrior::standard(*degree, *noise_variance).map_err(err)?;
            grid.iter().map(|&x| fig5_discrepancy(x, &family, &prior, &xs).map_err(err)).collect()
        })
        .collect()
}

pub fn discrepancy_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    let pool = cfg.pool.as_ref().expect("validated");
    let n = cfg.discrepancy.as_ref().expect("validated").grid_points;
    (0..n).map(|i| if i + 1 == n { pool.high } else { pool.low + (pool.high - pool.low) * i as f64 / (n - 1) as f64 }).collect()
}

fn thread_pool(parallelism: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new().num_threads(parallelism).build().map_err(|e| RunError::Threads(e.to_string()))
}

/// Runs every seed and aggregates in (seed, model, strategy) order.
///
/// `base` resolves relative dataset paths (usually the config's directory).
pub fn run_experiment(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<AggregateResults, RunError> {
    let pool = thread_pool(cfg.parallelism)?;
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).collect();
    let mut notes = serde_json::Map::new();
    match (&cfg.kind, &cfg.target) {
        (ExperimentKind::Discrepancy, TargetConfig::Synthetic(t)) => {
            let per_seed: Vec<_> = pool.install(|| seeds.par_iter().map(|&s| discrepancy_seed(cfg, t, s)).collect());
            let per_seed = per_seed.into_iter().collect::<Result<Vec<_>, _>>()?;
            let grid = discrepancy_grid(cfg);
            let mut rows = Vec::new();
            for (mi, m) in cfg.models.iter().enumerate() {
                for (gi, &x) in grid.iter().enumerate() {
                    rows.push(DiscrepancyRow { model: m.id(), x, values: per_seed.iter().map(|s| s[mi][gi]).collect() });
                }
            }
            Ok(AggregateResults { runs: Vec::new(), summary: Vec::new(), discrepancy: rows, notes })
        }
        (ExperimentKind::Discrepancy, TargetConfig::Dataset(_)) => unreachable!("validated"),
        (ExperimentKind::ActiveLearning, target) => {
            let loaded = match target {
                TargetConfig::Dataset(d) => {
                    let l = load_dataset(d, base).map_err(RunError::Dataset)?;
                    notes.insert("dropped_rows".into(), l.dropped_rows.into());
                    notes.insert("n_rows".into(), l.data.len().into());
                    Some(l)
                }
                TargetConfig::Synthetic(_) => None,
            };
            let per_seed: Vec<Result<SeedOutput, RunError>> = pool.install(|| {
                seeds
                    .par_iter()
                    .map(|&seed| {
                        let (world, st) = match (target, &loaded) {
                            (TargetConfig::Synthetic(t), _) => {
                                (synthetic_world(cfg, t, seed).map_err(|source| RunError::Setup { seed, source })?, None)
                            }
                            (TargetConfig::Dataset(d), Some(l)) => {
                                let (w, st) = dataset_world(cfg, d, &l.data, seed).map_err(|source| RunError::Setup { seed, source })?;
                                (w, Some(st))
                            }
                            (TargetConfig::Dataset(_), None) => unreachable!(),
                        };
                        if cfg.budget > world.pool.n_active().saturating_sub(world.init.len()) {
                            return Err(RunError::Setup {
                                seed,
                                source: ual_core::Error::BudgetExceedsPool {
                                    budget: cfg.budget,
                                    available: world.pool.len() - world.init.len(),
                                },
                            });
                        }
                        Ok((run_seed(cfg, &world, seed)?, st))
                    })
                    .collect()
            });
            let mut runs = Vec::new();
            let mut standardizers = Vec::new();
            for r in per_seed {
                let (seed_runs, st) = r?;
                runs.extend(seed_runs);
                if let Some(st) = st {
                    standardizers.push(st);
                }
            }
            if let Some(st) = standardizers.first() {
                notes.insert("dropped_columns_seed0".into(), serde_json::to_value(&st.dropped_columns).expect("strings"));
            }
            let models: Vec<String> = cfg.models.iter().map(|m| m.id()).collect();
            let strategies: Vec<&str> = cfg.strategies.iter().map(|s| s.id()).collect();
            let summary = summarize(&runs, &models, &strategies);
            Ok(AggregateResults { runs, summary, discrepancy: Vec::new(), notes })
        }
    }
}
