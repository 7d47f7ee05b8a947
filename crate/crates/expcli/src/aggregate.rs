//! Cross-seed aggregation.

use crate::runner::SeedRun;

/// Mean and sample standard deviation (ddof 1; zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub strategy: String,
    pub step: usize,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub n_seeds: usize,
    pub mean_bias: Option<f64>,
    pub mean_variance: Option<f64>,
}

/// Pointwise discrepancy of one model at one grid input, one value per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyRow {
    pub model: String,
    pub x: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResults {
    /// Ordered by seed, then model, then strategy.
    pub runs: Vec<SeedRun>,
    /// Ordered by model, strategy, step.
    pub summary: Vec<SummaryRow>,
    pub discrepancy: Vec<DiscrepancyRow>,
    /// Run metadata recorded in `meta.json`.
    pub notes: serde_json::Map<String, serde_json::Value>,
}

impl AggregateResults {
    pub fn summary_for<'a>(&'a self, model: &'a str, strategy: &'a str) -> impl Iterator<Item = &'a SummaryRow> + 'a {
        self.summary.iter().filter(move |r| r.model == model && r.strategy == strategy)
    }

    /// Mean test MSE of a (model, strategy) group at `step`.
    pub fn mean_at(&self, model: &str, strategy: &str, step: usize) -> Option<f64> {
        self.summary_for(model, strategy).find(|r| r.step == step).map(|r| r.mean_mse)
    }

    /// Per-seed test MSE of a group at `step`, in seed order.
    pub fn per_seed_at(&self, model: &str, strategy: &str, step: usize) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.trace.model_id == model && r.trace.strategy_id == strategy)
            .filter_map(|r| r.trace.mse_at(step))
            .collect()
    }
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.filter(|v| !v.is_empty()).map(|v| mean_std(&v).0)
}

pub fn summarize(runs: &[SeedRun], models: &[String], strategies: &[&str]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for model in models {
        for &strategy in strategies {
            let group: Vec<&SeedRun> = runs.iter().filter(|r| &r.trace.model_id == model && r.trace.strategy_id == strategy).collect();
            let steps = group.iter().map(|r| r.trace.records.len()).min().unwrap_or(0);
            for step in 0..steps {
                let mses: Vec<f64> = group.iter().map(|r| r.trace.records[step].test_mse).collect();
                let (mean_mse, std_mse) = mean_std(&mses);
                rows.push(SummaryRow {
                    model: model.clone(),
                    strategy: strategy.to_string(),
                    step,
                    mean_mse,
                    std_mse,
                    n_seeds: group.len(),
                    mean_bias: mean_opt(group.iter().map(|r| r.trace.records[step].bias)),
                    mean_variance: mean_opt(group.iter().map(|r| r.trace.records[step].variance)),
                });
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
    }
}
