//! Supervised classification on divergence tables: stratified splitting,
//! standardization, four classifiers, and multi-class evaluation.
//!
//! All training is single-threaded with fixed reduction order, so a
//! `(dataset, seed, hyperparameters)` triple always yields the same model.
//! Ties between classes are broken toward the lowest class index everywhere.

mod cnn;
mod logistic;
mod metrics;
mod model;
mod naive_bayes;
mod scale;
mod split;
mod tree;

use thiserror::Error;

pub use cnn::{train_cnn, CnnHyper, CnnModel, CONV_CHANNELS, CONV_KERNEL};
pub use logistic::{train_logistic_regression, LrHyper, LrModel};
pub use metrics::{evaluate, evaluate_predictions, ClassStats, EvalReport};
pub use model::{
    predict, train_model, Classifier, Hyperparameters, ModelKind, Prediction, TrainedModel,
};
pub use naive_bayes::{train_naive_bayes, NbModel, VARIANCE_FLOOR};
pub use scale::{standardize, Standardizer, SD_FLOOR};
pub use split::{stratified_split, SplitConfig};
pub use tree::{train_decision_tree, Node, TreeConfig, TreeModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("class {label} has {count} row(s); both partitions need at least one")]
    ClassTooSmall { label: usize, count: usize },
    #[error("class {0} has no training rows")]
    ClassAbsent(usize),
    #[error("training data holds a single class")]
    SingleClass,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("expected {expected} features, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("train fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("model file: {0}")]
    ModelFormat(String),
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `(features, labels)` views of a dataset.
pub(crate) fn columns(ds: &crate::features::Dataset) -> (Vec<Vec<f64>>, Vec<usize>) {
    ds.rows.iter().map(|r| (r.d.clone(), r.label)).unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_shift_invariant_and_normalized() {
        let a = softmax(&[1.0, 2.0, 3.0]);
        let b = softmax(&[1001.0, 1002.0, 1003.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }
}
