use serde::{Deserialize, Serialize};

use super::{Classifier, LearnError};
use crate::features::Dataset;

/// One-vs-rest counts and scores for a single class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// The class was never predicted, so its precision is reported as 0.
    pub no_predictions: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<ClassStats>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores predicted labels against the truth.
pub fn evaluate_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> EvalReport {
    assert_eq!(truth.len(), predicted.len(), "prediction count mismatch");
    let n_classes = truth
        .iter()
        .chain(predicted)
        .map(|&c| c + 1)
        .max()
        .unwrap_or(0)
        .max(n_classes);
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let total: u64 = truth.len() as u64;
    let correct: u64 = (0..n_classes).map(|c| confusion[c][c]).sum();

    let per_class: Vec<ClassStats> = (0..n_classes)
        .map(|c| {
            let tp = confusion[c][c];
            let row: u64 = confusion[c].iter().sum();
            let col: u64 = confusion.iter().map(|r| r[c]).sum();
            let fp = col - tp;
            let fn_ = row - tp;
            let precision = ratio(tp, col);
            let recall = ratio(tp, row);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassStats {
                tp,
                tn: total - tp - fp - fn_,
                fp,
                fn_,
                precision,
                recall,
                f1,
                no_predictions: col == 0,
            }
        })
        .collect();

    let k = n_classes.max(1) as f64;
    EvalReport {
        accuracy: ratio(correct, total),
        macro_precision: per_class.iter().map(|s| s.precision).sum::<f64>() / k,
        macro_recall: per_class.iter().map(|s| s.recall).sum::<f64>() / k,
        macro_f1: per_class.iter().map(|s| s.f1).sum::<f64>() / k,
        confusion,
        per_class,
    }
}

/// Predicts every test row and scores the result.
pub fn evaluate<M: Classifier + ?Sized>(
    model: &M,
    test: &Dataset,
) -> Result<EvalReport, LearnError> {
    if test.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut predicted = Vec::with_capacity(test.len());
    for row in &test.rows {
        predicted.push(model.predict(&row.d)?.label);
    }
    Ok(evaluate_predictions(
        &test.labels(),
        &predicted,
        model.n_classes().max(test.num_classes()),
    ))
}
