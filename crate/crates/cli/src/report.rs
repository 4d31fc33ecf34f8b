//! Run report written by `train-eval` and, optionally, `extract`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use benford_sep::features::Rejection;
use benford_sep::{EvalReport, Hyperparameters, ModelKind};
use serde::Serialize;

/// Fully resolved configuration, defaults included.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub qfs: Vec<u32>,
    pub seed: u64,
    pub train_fraction: f64,
    pub stratified: bool,
    pub models: Vec<ModelKind>,
    pub chi_scale: f64,
    pub params_path: Option<PathBuf>,
    pub hyperparameters: Hyperparameters,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub features: usize,
    pub label_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub train_rows: Option<usize>,
    pub test_rows: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Curves {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub loss: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub accuracy: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub evaluation: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curves: Option<Curves>,
}

/// Wall-clock durations in milliseconds. The only part of a report that
/// varies between identical runs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub stages: BTreeMap<String, f64>,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub models: Vec<ModelReport>,
    pub rejected: Vec<Rejection>,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(config: RunConfig, dataset: DatasetSummary) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            dataset,
            models: Vec::new(),
            rejected: Vec::new(),
            timings: Timings::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        s.push('\n');
        s
    }
}
