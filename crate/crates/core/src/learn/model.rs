use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    train_cnn, train_decision_tree, train_logistic_regression, train_naive_bayes, CnnHyper,
    CnnModel, LearnError, LrHyper, LrModel, NbModel, TreeConfig, TreeModel,
};
use crate::features::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: usize,
    /// Class probabilities, or a one-hot leaf indicator for trees.
    pub scores: Vec<f64>,
}

/// Inference contract shared by every model.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;
    /// Scores for a feature vector of the training arity.
    fn scores(&self, x: &[f64]) -> Vec<f64>;

    fn predict(&self, x: &[f64]) -> Result<Prediction, LearnError> {
        if x.len() != self.n_features() {
            return Err(LearnError::ArityMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        let scores = self.scores(x);
        Ok(Prediction {
            label: super::argmax(&scores),
            scores,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NaiveBayes,
    DecisionTree,
    LogisticRegression,
    Cnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::NaiveBayes,
        ModelKind::DecisionTree,
        ModelKind::LogisticRegression,
        ModelKind::Cnn,
    ];

    /// Short name used on the command line and in file names.
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::NaiveBayes => "nb",
            ModelKind::DecisionTree => "tree",
            ModelKind::LogisticRegression => "logreg",
            ModelKind::Cnn => "cnn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.short_name() == s)
            .ok_or_else(|| format!("unknown model {s:?} (expected nb, tree, logreg or cnn)"))
    }
}

/// Any trained classifier. Serializes to a self-describing JSON document
/// tagged by `kind`, with parameter arrays in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    NaiveBayes(NbModel),
    DecisionTree(TreeModel),
    LogisticRegression(LrModel),
    Cnn(CnnModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::NaiveBayes(_) => ModelKind::NaiveBayes,
            TrainedModel::DecisionTree(_) => ModelKind::DecisionTree,
            TrainedModel::LogisticRegression(_) => ModelKind::LogisticRegression,
            TrainedModel::Cnn(_) => ModelKind::Cnn,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            TrainedModel::NaiveBayes(m) => m,
            TrainedModel::DecisionTree(m) => m,
            TrainedModel::LogisticRegression(m) => m,
            TrainedModel::Cnn(m) => m,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        serde_json::from_str(text).map_err(|e| LearnError::ModelFormat(e.to_string()))
    }
}

impl Classifier for TrainedModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.inner().scores(x)
    }
}

/// Hyperparameters for every model kind.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub tree: TreeConfig,
    pub logreg: LrHyper,
    pub cnn: CnnHyper,
}

pub fn train_model(
    kind: ModelKind,
    train: &Dataset,
    hyper: &Hyperparameters,
) -> Result<TrainedModel, LearnError> {
    Ok(match kind {
        ModelKind::NaiveBayes => TrainedModel::NaiveBayes(train_naive_bayes(train)?),
        ModelKind::DecisionTree => {
            TrainedModel::DecisionTree(train_decision_tree(train, &hyper.tree)?)
        }
        ModelKind::LogisticRegression => {
            TrainedModel::LogisticRegression(train_logistic_regression(train, &hyper.logreg)?)
        }
        ModelKind::Cnn => TrainedModel::Cnn(train_cnn(train, &hyper.cnn)?),
    })
}

pub fn predict(model: &TrainedModel, features: &[f64]) -> Result<Prediction, LearnError> {
    model.predict(features)
}
