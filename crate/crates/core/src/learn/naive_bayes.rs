//! Gaussian Naive Bayes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{softmax, Classifier, LearnError};
use crate::features::Dataset;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub class_priors: Vec<f64>,
    /// `means[class][feature]`
    pub means: Vec<Vec<f64>>,
    /// Population variances, floored at [`VARIANCE_FLOOR`].
    pub variances: Vec<Vec<f64>>,
}

impl NbModel {
    /// `ln P(c) + Σ ln N(x_j; μ_cj, σ²_cj)` for every class.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        self.class_priors
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(prior, (mu, var))| {
                let mut lp = prior.ln();
                for ((v, m), s2) in x.iter().zip(mu).zip(var) {
                    lp -= 0.5 * (2.0 * PI * s2).ln() + (v - m) * (v - m) / (2.0 * s2);
                }
                lp
            })
            .collect()
    }
}

impl Classifier for NbModel {
    fn n_features(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    fn n_classes(&self) -> usize {
        self.class_priors.len()
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.log_joint(x))
    }
}

pub fn train_naive_bayes(train: &Dataset) -> Result<NbModel, LearnError> {
    if train.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let n_classes = train.num_classes();
    let width = train.num_features();
    let counts = train.class_counts();
    if let Some(absent) = counts.iter().position(|&c| c == 0) {
        return Err(LearnError::ClassAbsent(absent));
    }

    let mut means = vec![vec![0.0; width]; n_classes];
    for row in &train.rows {
        for (m, v) in means[row.label].iter_mut().zip(&row.d) {
            *m += v;
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut variances = vec![vec![0.0; width]; n_classes];
    for row in &train.rows {
        let mu = &means[row.label];
        for ((s, v), m) in variances[row.label].iter_mut().zip(&row.d).zip(mu) {
            *s += (v - m) * (v - m);
        }
    }
    for (var, &n) in variances.iter_mut().zip(&counts) {
        var.iter_mut()
            .for_each(|v| *v = (*v / n as f64).max(VARIANCE_FLOOR));
    }
    let total = train.len() as f64;
    Ok(NbModel {
        class_priors: counts.iter().map(|&c| c as f64 / total).collect(),
        means,
        variances,
    })
}
