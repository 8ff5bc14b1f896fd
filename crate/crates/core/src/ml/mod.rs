//! The three classifiers: L2-regularized logistic regression, a CART random
//! forest and k-nearest neighbours. All are deterministic given the config.

mod forest;
mod knn;
mod logistic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

pub use forest::{DecisionTree, ForestModel, TreeNode};
pub use knn::{nearest_neighbours, KnnModel};
pub use logistic::{logistic_gradient, logistic_objective, LogisticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    LR,
    RF,
    KNN,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::LR, ClassifierKind::RF, ClassifierKind::KNN];

    pub fn tag(self) -> &'static str {
        match self {
            ClassifierKind::LR => "LR",
            ClassifierKind::RF => "RF",
            ClassifierKind::KNN => "KNN",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown classifier `{0}` (expected lr, rf or knn)")]
pub struct UnknownClassifier(pub String);

impl FromStr for ClassifierKind {
    type Err = UnknownClassifier;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.tag() == up)
            .ok_or_else(|| UnknownClassifier(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub lr_max_iter: usize,
    /// Inverse regularization strength.
    pub lr_l2: f64,
    pub rf_trees: usize,
    pub rf_max_depth: usize,
    pub knn_k: usize,
    pub seed: u64,
}

impl ClassifierConfig {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        ClassifierConfig {
            kind,
            lr_max_iter: 200,
            lr_l2: 1.0,
            rf_trees: 100,
            rf_max_depth: 100,
            knn_k: 5,
            seed,
        }
    }

    fn validate(&self) -> Result<(), MlError> {
        let bad = |what: &str| Err(MlError::InvalidConfig(what.to_string()));
        match self.kind {
            ClassifierKind::LR if self.lr_max_iter == 0 => bad("lr_max_iter must be positive"),
            ClassifierKind::LR if !(self.lr_l2 > 0.0 && self.lr_l2.is_finite()) => {
                bad("lr_l2 must be positive and finite")
            }
            ClassifierKind::RF if self.rf_trees == 0 => bad("rf_trees must be positive"),
            ClassifierKind::RF if self.rf_max_depth == 0 => bad("rf_max_depth must be positive"),
            ClassifierKind::KNN if self.knn_k == 0 => bad("knn_k must be positive"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MlError {
    #[error("training set has {rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("training needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("labels must be 0 or 1, found {0}")]
    NonBinaryLabel(u8),
    #[error("training labels contain a single class; {0} needs both")]
    SingleClass(ClassifierKind),
    #[error("model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
    #[error("non-finite value in training data")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TrainedModel {
    LR(LogisticModel),
    RF(ForestModel),
    KNN(KnnModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::LR(_) => ClassifierKind::LR,
            TrainedModel::RF(_) => ClassifierKind::RF,
            TrainedModel::KNN(_) => ClassifierKind::KNN,
        }
    }

    fn dim(&self) -> usize {
        match self {
            TrainedModel::LR(m) => m.weights.len(),
            TrainedModel::RF(m) => m.n_features,
            TrainedModel::KNN(m) => m.train.cols(),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>, MlError> {
        if x.cols() != self.dim() {
            return Err(MlError::DimensionMismatch {
                expected: self.dim(),
                got: x.cols(),
            });
        }
        Ok(match self {
            TrainedModel::LR(m) => m.predict(x),
            TrainedModel::RF(m) => m.predict(x),
            TrainedModel::KNN(m) => m.predict(x),
        })
    }

    /// Debug dump; the layout is not a stable format.
    pub fn to_json(&self, config: &ClassifierConfig) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind(),
            "config": config,
            "parameters": self,
        })
    }
}

pub fn train(config: &ClassifierConfig, x: &Matrix, y: &[u8]) -> Result<TrainedModel, MlError> {
    config.validate()?;
    if x.rows() != y.len() {
        return Err(MlError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(MlError::TooFewRows(y.len()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(MlError::NonBinaryLabel(bad));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(MlError::NonFinite);
    }
    let single = y.iter().all(|&l| l == y[0]);
    if single && config.kind != ClassifierKind::KNN {
        return Err(MlError::SingleClass(config.kind));
    }
    Ok(match config.kind {
        ClassifierKind::LR => TrainedModel::LR(LogisticModel::fit(x, y, config.lr_l2, config.lr_max_iter)),
        ClassifierKind::RF => TrainedModel::RF(ForestModel::fit(
            x,
            y,
            config.rf_trees,
            config.rf_max_depth,
            config.seed,
        )),
        ClassifierKind::KNN => TrainedModel::KNN(KnnModel::fit(x, y, config.knn_k)),
    })
}

pub fn accuracy(pred: &[u8], truth: &[u8]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64
}
