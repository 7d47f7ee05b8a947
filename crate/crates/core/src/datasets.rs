//! Loading, splitting and standardizing tabular regression data.
//!
//! Column roles come from a [`DatasetSchema`]; the two built-in schemas are
//! also shipped as JSON under `schemas/` so they can be copied and edited.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const CONCRETE_SCHEMA: &str = include_str!("../schemas/concrete.json");
const FACEBOOK_SCHEMA: &str = include_str!("../schemas/facebook.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetColumn {
    /// Column with this header name.
    Name(String),
    /// The last column of the file.
    Last,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub name: String,
    pub delimiter: char,
    pub target: TargetColumn,
    /// Feature columns by header name; `None` means every non-target column.
    pub features: Option<Vec<String>>,
    /// Feature columns to one-hot encode.
    #[serde(default)]
    pub categorical: Vec<String>,
    /// Required header width, if fixed.
    #[serde(default)]
    pub expected_columns: Option<usize>,
}

impl DatasetSchema {
    /// Built-in schema by name (`concrete` or `facebook`).
    pub fn builtin(name: &str) -> Result<Self> {
        let text = match name {
            "concrete" => CONCRETE_SCHEMA,
            "facebook" => FACEBOOK_SCHEMA,
            other => return Err(Error::InvalidArgument(format!("unknown built-in schema '{other}'"))),
        };
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn select(&self, rows: &[usize]) -> Self {
        Self {
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub dataset: TabularDataset,
    pub dropped_rows: usize,
}

fn header_mismatch(schema: &DatasetSchema, detail: String) -> Error {
    Error::HeaderMismatch { schema: schema.name.clone(), detail }
}

/// Reads a delimited file with a header row under `schema`.
///
/// Rows with the wrong width, empty cells, or unparseable or non-finite
/// numbers are dropped and counted.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<LoadReport> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let delimiter = u8::try_from(schema.delimiter)
        .map_err(|_| Error::InvalidArgument(format!("delimiter '{}' is not a single byte", schema.delimiter)))?;
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).flexible(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if let Some(expected) = schema.expected_columns {
        if header.len() != expected {
            return Err(header_mismatch(schema, format!("expected {expected} columns, found {}", header.len())));
        }
    }
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| header_mismatch(schema, format!("column '{name}' not in header")))
    };
    let target_idx = match &schema.target {
        TargetColumn::Name(name) => position(name)?,
        TargetColumn::Last => header.len().checked_sub(1).ok_or_else(|| header_mismatch(schema, "empty header".into()))?,
    };
    let feature_idx: Vec<usize> = match &schema.features {
        Some(names) => names.iter().map(|n| position(n)).collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&i| i != target_idx).collect(),
    };
    for c in &schema.categorical {
        if !feature_idx.iter().any(|&i| &header[i] == c) {
            return Err(header_mismatch(schema, format!("categorical column '{c}' is not a feature")));
        }
    }
    let is_categorical: Vec<bool> = feature_idx.iter().map(|&i| schema.categorical.contains(&header[i])).collect();

    enum Cell {
        Num(f64),
        Cat(String),
    }
    let parse_num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite());

    let mut rows: Vec<(Vec<Cell>, f64)> = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let Ok(record) = record else {
            dropped += 1;
            continue;
        };
        if record.len() != header.len() {
            dropped += 1;
            continue;
        }
        let Some(target) = parse_num(&record[target_idx]) else {
            dropped += 1;
            continue;
        };
        let cells: Option<Vec<Cell>> = feature_idx
            .iter()
            .zip(&is_categorical)
            .map(|(&i, &cat)| {
                let raw = record[i].trim();
                if cat {
                    (!raw.is_empty()).then(|| Cell::Cat(raw.to_string()))
                } else {
                    parse_num(raw).map(Cell::Num)
                }
            })
            .collect();
        match cells {
            Some(cells) => rows.push((cells, target)),
            None => dropped += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::AllRowsDropped(dropped));
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} malformed rows", path.display());
    }

    // One-hot levels in sorted order, taken from the retained rows.
    let levels: Vec<Vec<String>> = (0..feature_idx.len())
        .map(|j| {
            if !is_categorical[j] {
                return Vec::new();
            }
            let set: BTreeSet<&str> = rows
                .iter()
                .filter_map(|(cells, _)| match &cells[j] {
                    Cell::Cat(s) => Some(s.as_str()),
                    Cell::Num(_) => None,
                })
                .collect();
            set.into_iter().map(String::from).collect()
        })
        .collect();
    let mut feature_names = Vec::new();
    for (j, &i) in feature_idx.iter().enumerate() {
        if is_categorical[j] {
            feature_names.extend(levels[j].iter().map(|lv| format!("{}={lv}", header[i])));
        } else {
            feature_names.push(header[i].clone());
        }
    }
    let mut features = Vec::with_capacity(rows.len());
    let mut targets = Vec::with_capacity(rows.len());
    for (cells, target) in rows {
        let mut row = Vec::with_capacity(feature_names.len());
        for (j, cell) in cells.into_iter().enumerate() {
            match cell {
                Cell::Num(v) => row.push(v),
                Cell::Cat(s) => row.extend(levels[j].iter().map(|lv| if *lv == s { 1.0 } else { 0.0 })),
            }
        }
        features.push(row);
        targets.push(target);
    }
    Ok(LoadReport {
        dataset: TabularDataset { features, targets, feature_names, target_name: header[target_idx].clone() },
        dropped_rows: dropped,
    })
}

/// Optional subsample without replacement, then a disjoint random split with
/// `round(n · test_fraction)` test rows.
pub fn split<R: Rng + ?Sized>(
    ds: &TabularDataset,
    test_fraction: f64,
    subsample: Option<usize>,
    rng: &mut R,
) -> Result<(TabularDataset, TabularDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let mut rows: Vec<usize> = match subsample {
        Some(k) if k > ds.len() => return Err(Error::SubsampleTooLarge { requested: k, available: ds.len() }),
        Some(k) => rand::seq::index::sample(rng, ds.len(), k).into_vec(),
        None => (0..ds.len()).collect(),
    };
    rows.shuffle(rng);
    let n_test = (rows.len() as f64 * test_fraction).round() as usize;
    let (test_rows, train_rows) = rows.split_at(n_test);
    let mut test_rows = test_rows.to_vec();
    let mut train_rows = train_rows.to_vec();
    test_rows.sort_unstable();
    train_rows.sort_unstable();
    Ok((ds.select(&train_rows), ds.select(&test_rows)))
}

/// Column-wise z-scoring fit on a training partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardizer {
    /// Indices of the retained feature columns.
    pub kept_columns: Vec<usize>,
    /// Names of zero-variance columns that were dropped.
    pub dropped_columns: Vec<String>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Standardizer {
    /// Population mean and standard deviation of every column of `train`.
    pub fn fit(train: &TabularDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("cannot standardize an empty dataset".into()));
        }
        let (target_mean, target_std) = mean_std(train.targets.iter().copied());
        if !(target_std > 0.0) {
            return Err(Error::InvalidArgument(format!("target '{}' is constant", train.target_name)));
        }
        let mut st = Self {
            kept_columns: Vec::new(),
            dropped_columns: Vec::new(),
            feature_means: Vec::new(),
            feature_stds: Vec::new(),
            target_mean,
            target_std,
        };
        for j in 0..train.n_features() {
            let (m, s) = mean_std(train.features.iter().map(|r| r[j]));
            if s > 0.0 {
                st.kept_columns.push(j);
                st.feature_means.push(m);
                st.feature_stds.push(s);
            } else {
                log::warn!("dropping zero-variance column '{}'", train.feature_names[j]);
                st.dropped_columns.push(train.feature_names[j].clone());
            }
        }
        Ok(st)
    }

    pub fn apply(&self, ds: &TabularDataset) -> TabularDataset {
        let features = ds
            .features
            .iter()
            .map(|row| {
                self.kept_columns
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| (row[j] - self.feature_means[k]) / self.feature_stds[k])
                    .collect()
            })
            .collect();
        TabularDataset {
            features,
            targets: ds.targets.iter().map(|&y| (y - self.target_mean) / self.target_std).collect(),
            feature_names: self.kept_columns.iter().map(|&j| ds.feature_names[j].clone()).collect(),
            target_name: ds.target_name.clone(),
        }
    }

    pub fn inverse_target(&self, y: f64) -> f64 {
        y * self.target_std + self.target_mean
    }
}
