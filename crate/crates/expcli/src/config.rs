//! Strict JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ual_core::acquisition::{StrategySpec, DEFAULT_CONFIDENCE, DEFAULT_SURROGATE};
use ual_core::alloop::EvalMode;
use ual_core::bpr::BprPrior;
use ual_core::gpr::{KernelSpec, MeanFn};
use ual_core::model::ModelSpec;
use ual_core::synthetic::{GroundTruthTarget, TargetKind, TestLayout};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    /// serde_json reports line and column, and names unknown keys.
    #[error("{origin}: {source}")]
    Parse { origin: String, source: serde_json::Error },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Paired acquisition-strategy learning curves.
    #[default]
    ActiveLearning,
    /// Pointwise gap between closed-form MSE and twice the posterior variance.
    Discrepancy,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_test_fraction() -> f64 {
    0.25
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTarget {
    pub order: usize,
    #[serde(default = "pure")]
    pub kind: TargetKind,
    #[serde(default = "one")]
    pub noise_variance: f64,
    #[serde(default = "one")]
    pub cosine_amplitude: f64,
    #[serde(default = "one")]
    pub cosine_frequency: f64,
}

fn pure() -> TargetKind {
    TargetKind::PurePolynomial
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetTarget {
    /// Built-in schema name (`concrete`, `facebook`) or path to a schema JSON file.
    pub schema: String,
    /// User-supplied CSV file.
    pub path: PathBuf,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub subsample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    Synthetic(SyntheticTarget),
    Dataset(DatasetTarget),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// BPR with the standard prior `N(0, I)`.
    Bpr {
        degree: usize,
        #[serde(default = "one")]
        noise_variance: f64,
        #[serde(default)]
        label: Option<String>,
    },
    Gpr {
        kernel: KernelSpec,
        #[serde(default = "one")]
        noise_variance: f64,
        #[serde(default)]
        mean: MeanFn,
        #[serde(default)]
        label: Option<String>,
    },
}

impl ModelConfig {
    pub fn id(&self) -> String {
        match self {
            Self::Bpr { label: Some(l), .. } | Self::Gpr { label: Some(l), .. } => l.clone(),
            Self::Bpr { degree, .. } => format!("bpr_p{degree}"),
            Self::Gpr { kernel, .. } => format!("gpr_{}", kernel.name()),
        }
    }

    pub fn spec(&self) -> ual_core::Result<ModelSpec> {
        match self {
            Self::Bpr { degree, noise_variance, .. } => Ok(ModelSpec::Bpr(BprPrior::standard(*degree, *noise_variance)?)),
            Self::Gpr { kernel, noise_variance, mean, .. } => {
                kernel.validate()?;
                if !(*noise_variance > 0.0) {
                    return Err(ual_core::Error::InvalidArgument(format!("noise variance must be > 0, got {noise_variance}")));
                }
                Ok(ModelSpec::Gpr { kernel: *kernel, mean: *mean, noise_variance: *noise_variance })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoBound {
    /// Derived per target from its coefficients over the pool interval.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GradientBound {
    Fixed(f64),
    Auto(AutoBound),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyConfig {
    Variance,
    Random,
    DirectMse {
        #[serde(default)]
        surrogate: Option<KernelSpec>,
    },
    UpperBound {
        #[serde(default)]
        surrogate: Option<KernelSpec>,
        gradient_bound: GradientBound,
        #[serde(default = "default_confidence")]
        confidence: f64,
    },
}

impl StrategyConfig {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Variance => "variance",
            Self::Random => "random",
            Self::DirectMse { .. } => "direct_mse",
            Self::UpperBound { .. } => "upper_bound",
        }
    }

    /// Concrete strategy for one seed; `target` resolves an `auto` gradient bound.
    pub fn resolve(&self, target: Option<&GroundTruthTarget>, pool: Option<&PoolConfig>) -> ual_core::Result<StrategySpec> {
        let spec = match self {
            Self::Variance => StrategySpec::Variance,
            Self::Random => StrategySpec::Random,
            Self::DirectMse { surrogate } => StrategySpec::DirectMse { surrogate: surrogate.unwrap_or(DEFAULT_SURROGATE) },
            Self::UpperBound { surrogate, gradient_bound, confidence } => {
                let bound = match gradient_bound {
                    GradientBound::Fixed(v) => *v,
                    GradientBound::Auto(AutoBound::Auto) => match (target, pool) {
                        (Some(t), Some(p)) => t.gradient_bound(p.low, p.high),
                        _ => {
                            return Err(ual_core::Error::InvalidArgument(
                                "an automatic gradient bound needs a synthetic target".into(),
                            ))
                        }
                    },
                };
                StrategySpec::UpperBound {
                    surrogate: surrogate.unwrap_or(DEFAULT_SURROGATE),
                    gradient_bound: bound,
                    confidence: *confidence,
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    pub size: usize,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    pub size: usize,
    #[serde(default)]
    pub layout: TestLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscrepancyConfig {
    /// Labeled inputs per seed, drawn from the pool without replacement.
    pub n_train: usize,
    /// Evaluation grid size over the pool interval.
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    #[serde(default)]
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub n_seeds: usize,
    #[serde(default)]
    pub budget: usize,
    /// Initial labeled points drawn from the pool (shared by all runs of a seed).
    #[serde(default = "one_usize")]
    pub init_size: usize,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub parallelism: usize,
    /// Record bias and variance per step (synthetic targets only).
    #[serde(default)]
    pub decompose: bool,
    /// Defaults to `vs_clean` for synthetic and `vs_observed` for datasets.
    #[serde(default)]
    pub eval_mode: Option<EvalMode>,
    pub target: TargetConfig,
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub strategies: Vec<StrategyConfig>,
    #[serde(default)]
    pub pool: Option<PoolConfig>,
    #[serde(default)]
    pub test: Option<TestConfig>,
    #[serde(default)]
    pub discrepancy: Option<DiscrepancyConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| ConfigError::Parse { origin: origin.to_string(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn eval_mode(&self) -> EvalMode {
        self.eval_mode.unwrap_or(match self.target {
            TargetConfig::Synthetic(_) => EvalMode::VsClean,
            TargetConfig::Dataset(_) => EvalMode::VsObserved,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let id_ok = !self.experiment_id.is_empty()
            && self.experiment_id.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-');
        if !id_ok {
            return Err(invalid("experiment_id", format!("'{}' must match [a-z0-9_-]+", self.experiment_id)));
        }
        if self.n_seeds == 0 {
            return Err(invalid("n_seeds", "must be at least 1"));
        }
        if self.models.is_empty() {
            return Err(invalid("models", "at least one model is required"));
        }
        let mut ids = Vec::new();
        for (i, m) in self.models.iter().enumerate() {
            m.spec().map_err(|e| invalid(format!("models[{i}]"), e.to_string()))?;
            let id = m.id();
            if ids.contains(&id) {
                return Err(invalid(format!("models[{i}]"), format!("duplicate model id '{id}'; set a distinct `label`")));
            }
            let id_ok = id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
            if !id_ok {
                return Err(invalid(format!("models[{i}].label"), format!("'{id}' must match [A-Za-z0-9_-]+")));
            }
            ids.push(id);
        }
        let synthetic = match &self.target {
            TargetConfig::Synthetic(t) => {
                if !(t.noise_variance >= 0.0) || !t.noise_variance.is_finite() {
                    return Err(invalid("target.synthetic.noise_variance", "must be finite and >= 0"));
                }
                Some(t)
            }
            TargetConfig::Dataset(d) => {
                if !(d.test_fraction > 0.0 && d.test_fraction < 1.0) {
                    return Err(invalid("target.dataset.test_fraction", "must lie in (0, 1)"));
                }
                if self.decompose {
                    return Err(invalid("decompose", "needs a synthetic target"));
                }
                if self.eval_mode == Some(EvalMode::VsClean) {
                    return Err(invalid("eval_mode", "datasets have no noise-free targets"));
                }
                if self.pool.is_some() || self.test.is_some() {
                    return Err(invalid("pool", "pool and test sets come from the dataset split"));
                }
                None
            }
        };
        if let Some(pool) = &self.pool {
            if pool.size == 0 {
                return Err(invalid("pool.size", "must be at least 1"));
            }
            if !(pool.low < pool.high) {
                return Err(invalid("pool", format!("interval [{}, {}] is empty", pool.low, pool.high)));
            }
        }
        if let Some(test) = &self.test {
            if test.size == 0 {
                return Err(invalid("test.size", "must be at least 1"));
            }
        }
        match self.kind {
            ExperimentKind::ActiveLearning => {
                if self.strategies.is_empty() {
                    return Err(invalid("strategies", "at least one strategy is required"));
                }
                if self.init_size == 0 {
                    return Err(invalid("init_size", "must be at least 1"));
                }
                if self.discrepancy.is_some() {
                    return Err(invalid("discrepancy", "only valid for kind `discrepancy`"));
                }
                if synthetic.is_some() {
                    let pool = self.pool.as_ref().ok_or_else(|| invalid("pool", "required for synthetic targets"))?;
                    if self.test.is_none() {
                        return Err(invalid("test", "required for synthetic targets"));
                    }
                    if self.init_size > pool.size {
                        return Err(invalid("init_size", format!("{} exceeds pool size {}", self.init_size, pool.size)));
                    }
                    if self.budget > pool.size - self.init_size {
                        return Err(invalid(
                            "budget",
                            format!("{} exceeds the {} unlabeled pool points", self.budget, pool.size - self.init_size),
                        ));
                    }
                }
                let mut seen = Vec::new();
                for (i, s) in self.strategies.iter().enumerate() {
                    if seen.contains(&s.id()) {
                        return Err(invalid(format!("strategies[{i}]"), format!("duplicate strategy '{}'", s.id())));
                    }
                    seen.push(s.id());
                    let probe = synthetic.map(|t| {
                        GroundTruthTarget::polynomial(vec![0.0; t.order + 1], t.noise_variance)
                            .map(|g| g.with_cosine(t.cosine_amplitude, t.cosine_frequency))
                    });
                    let probe = probe.transpose().map_err(|e| invalid("target", e.to_string()))?;
                    s.resolve(probe.as_ref(), self.pool.as_ref()).map_err(|e| invalid(format!("strategies[{i}]"), e.to_string()))?;
                }
                if synthetic.is_none() && self.models.iter().any(|m| matches!(m, ModelConfig::Bpr { .. })) {
                    return Err(invalid("models", "BPR models need scalar inputs; use GPR for datasets"));
                }
            }
            ExperimentKind::Discrepancy => {
                let t = synthetic.ok_or_else(|| invalid("target", "discrepancy experiments need a synthetic target"))?;
                if t.kind != TargetKind::PurePolynomial {
                    return Err(invalid("target.synthetic.kind", "discrepancy experiments need a pure polynomial family"));
                }
                if !(t.noise_variance > 0.0) {
                    return Err(invalid("target.synthetic.noise_variance", "must be > 0"));
                }
                let d = self.discrepancy.as_ref().ok_or_else(|| invalid("discrepancy", "required for kind `discrepancy`"))?;
                let pool = self.pool.as_ref().ok_or_else(|| invalid("pool", "required for kind `discrepancy`"))?;
                if d.n_train > pool.size {
                    return Err(invalid("discrepancy.n_train", format!("{} exceeds pool size {}", d.n_train, pool.size)));
                }
                if d.grid_points < 2 {
                    return Err(invalid("discrepancy.grid_points", "must be at least 2"));
                }
                for (i, m) in self.models.iter().enumerate() {
                    match m {
                        ModelConfig::Bpr { noise_variance, .. } if *noise_variance == t.noise_variance => {}
                        ModelConfig::Bpr { .. } => {
                            return Err(invalid(format!("models[{i}].noise_variance"), "must equal the target noise variance"))
                        }
                        ModelConfig::Gpr { .. } => return Err(invalid(format!("models[{i}]"), "discrepancy needs BPR models")),
                    }
                }
                if !self.strategies.is_empty() {
                    return Err(invalid("strategies", "not used by kind `discrepancy`"));
                }
            }
        }
        Ok(())
    }
}
