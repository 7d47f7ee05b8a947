//! Writes experiment artifacts: CSV traces and summaries, `meta.json`, SVG curves.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::{mean_std, AggregateResults};
use crate::config::ExperimentConfig;
use crate::svg::{render, Chart, Series};

pub const TRACES_HEADER: &str = "experiment_id,seed,model,strategy,step,n_labeled,chosen_x,test_mse,mc_bias,mc_variance";
pub const SUMMARY_HEADER: &str = "experiment_id,model,strategy,step,mean_mse,std_mse,n_seeds";
pub const DISCREPANCY_HEADER: &str = "experiment_id,model,x,mean_discrepancy,std_discrepancy,n_seeds";

#[derive(Debug, thiserror::Error)]
#[error("writing {path}: {source}")]
pub struct EmitError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

/// Provenance record written next to the CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub config: ExperimentConfig,
    pub version: String,
    pub wall_time_seconds: f64,
    #[serde(default)]
    pub notes: serde_json::Map<String, serde_json::Value>,
}

/// 17 significant digits; round-trips every finite f64.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn traces_csv(id: &str, results: &AggregateResults) -> String {
    let mut s = String::new();
    s.push_str(TRACES_HEADER);
    s.push('\n');
    for run in &results.runs {
        for r in &run.trace.records {
            let chosen = r.chosen_x.as_ref().map(|x| x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{id},{},{},{},{},{},{chosen},{},{},{}",
                run.seed,
                run.trace.model_id,
                run.trace.strategy_id,
                r.step,
                r.n_labeled,
                num(r.test_mse),
                opt(r.bias),
                opt(r.variance)
            );
        }
    }
    s
}

pub fn summary_csv(id: &str, results: &AggregateResults) -> String {
    let mut s = String::new();
    s.push_str(SUMMARY_HEADER);
    s.push('\n');
    for r in &results.summary {
        let _ = writeln!(s, "{id},{},{},{},{},{},{}", r.model, r.strategy, r.step, num(r.mean_mse), num(r.std_mse), r.n_seeds);
    }
    s
}

pub fn discrepancy_csv(id: &str, results: &AggregateResults) -> String {
    let mut s = String::new();
    s.push_str(DISCREPANCY_HEADER);
    s.push('\n');
    for r in &results.discrepancy {
        let (m, sd) = mean_std(&r.values);
        let _ = writeln!(s, "{id},{},{},{},{},{}", r.model, num(r.x), num(m), num(sd), r.values.len());
    }
    s
}

fn ordered_unique<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

/// Mean test MSE against step, one line per strategy, shaded ± one standard deviation.
pub fn curves_chart(id: &str, model: &str, results: &AggregateResults) -> Chart {
    let strategies = ordered_unique(results.summary.iter().filter(|r| r.model == model).map(|r| r.strategy.as_str()));
    let series = strategies
        .into_iter()
        .map(|strategy| {
            let rows: Vec<_> = results.summary_for(model, strategy).collect();
            Series {
                label: strategy.to_string(),
                points: rows.iter().map(|r| (r.step as f64, r.mean_mse)).collect(),
                band: Some(rows.iter().map(|r| (r.step as f64, r.mean_mse - r.std_mse, r.mean_mse + r.std_mse)).collect()),
            }
        })
        .collect();
    Chart { title: format!("{id}: {model}"), x_label: "acquisition step".into(), y_label: "test MSE".into(), log_y: true, series }
}

/// Mean bias and variance against step for each strategy.
fn decomposition_chart(id: &str, model: &str, results: &AggregateResults) -> Option<Chart> {
    let strategies = ordered_unique(results.summary.iter().filter(|r| r.model == model).map(|r| r.strategy.as_str()));
    let mut series = Vec::new();
    for strategy in strategies {
        let rows: Vec<_> = results.summary_for(model, strategy).collect();
        for (name, pick) in [("bias", 0usize), ("variance", 1)] {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| if pick == 0 { r.mean_bias } else { r.mean_variance }.map(|v| (r.step as f64, v)))
                .collect();
            if !points.is_empty() {
                series.push(Series { label: format!("{strategy} {name}"), points, band: None });
            }
        }
    }
    (!series.is_empty()).then(|| Chart {
        title: format!("{id}: {model} bias / variance"),
        x_label: "acquisition step".into(),
        y_label: "mean over test inputs".into(),
        log_y: true,
        series,
    })
}

fn discrepancy_chart(id: &str, results: &AggregateResults) -> Chart {
    let models = ordered_unique(results.discrepancy.iter().map(|r| r.model.as_str()));
    let series = models
        .into_iter()
        .map(|m| Series {
            label: m.to_string(),
            points: results.discrepancy.iter().filter(|r| r.model == m).map(|r| (r.x, mean_std(&r.values).0.abs())).collect(),
            band: None,
        })
        .collect();
    Chart { title: format!("{id}: |MSE - 2 variance|"), x_label: "x".into(), y_label: "mean absolute discrepancy".into(), log_y: true, series }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, EmitError> {
    std::fs::write(&path, contents).map_err(|source| EmitError { path: path.clone(), source })?;
    Ok(path)
}

/// Writes every artifact into `out_dir` (created if missing) and returns the paths written.
pub fn emit(cfg: &ExperimentConfig, results: &AggregateResults, out_dir: &Path, wall_time_seconds: f64) -> Result<Vec<PathBuf>, EmitError> {
    std::fs::create_dir_all(out_dir).map_err(|source| EmitError { path: out_dir.to_path_buf(), source })?;
    let id = &cfg.experiment_id;
    let mut written = Vec::new();
    if results.discrepancy.is_empty() {
        written.push(write(out_dir.join("traces.csv"), &traces_csv(id, results))?);
        written.push(write(out_dir.join("summary.csv"), &summary_csv(id, results))?);
        let models = ordered_unique(results.summary.iter().map(|r| r.model.as_str()));
        for model in models {
            written.push(write(out_dir.join(format!("curves_{model}.svg")), &render(&curves_chart(id, model, results)))?);
            if let Some(chart) = decomposition_chart(id, model, results) {
                written.push(write(out_dir.join(format!("decomposition_{model}.svg")), &render(&chart))?);
            }
        }
    } else {
        written.push(write(out_dir.join("discrepancy.csv"), &discrepancy_csv(id, results))?);
        written.push(write(out_dir.join("discrepancy.svg"), &render(&discrepancy_chart(id, results)))?);
    }
    let meta = Meta { config: cfg.clone(), version: env!("CARGO_PKG_VERSION").into(), wall_time_seconds, notes: results.notes.clone() };
    let json = serde_json::to_string_pretty(&meta).expect("config serializes");
    written.push(write(out_dir.join("meta.json"), &(json + "\n"))?);
    Ok(written)
}
