//! Classifiers, evaluation, impurity importances and all-relevant selection.

pub mod gbdt;
pub mod importance;
pub mod logistic;
pub mod metrics;
pub mod select;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledDataset;

pub use gbdt::{train_gbdt, BoostedTreesModel, EarlyStopping, GbdtConfig, TreeNode};
pub use importance::{gini_importance, FeatureImportance, HyperGrid};
pub use logistic::{train_logistic, LogisticConfig, LogisticModel};
pub use metrics::{roc_auc, Confusion, EvalMetrics};
pub use select::{all_relevant_select, SelectConfig, SelectionVerdict, Status};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("both classes must be present")]
    SingleClass,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("{0}")]
    EmptyInput(String),
    #[error("hyperparameter grid has an empty axis")]
    EmptyGrid,
    #[error("selection needs at least 5 iterations, got {0}")]
    TooFewIterations(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model feature {0:?} is not in the dataset")]
    UnknownFeature(String),
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// Either trained classifier, as stored in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Model {
    Logistic(LogisticModel),
    Gbdt(BoostedTreesModel),
}

impl Model {
    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::Logistic(m) => &m.feature_names,
            Model::Gbdt(m) => &m.feature_names,
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        match self {
            Model::Logistic(m) => m.predict_proba(x),
            Model::Gbdt(m) => m.predict_proba(x),
        }
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, LearnError> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    /// The model's input columns picked out of `ds` by name.
    pub fn project(&self, ds: &LabeledDataset) -> Result<LabeledDataset, LearnError> {
        let columns = self
            .feature_names()
            .iter()
            .map(|n| {
                ds.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| LearnError::UnknownFeature(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ds.select_columns(&columns))
    }
}

/// Point metrics at `threshold` plus AUC on a held-out split.
pub fn evaluate(model: &Model, test: &LabeledDataset, threshold: f64) -> Result<EvalMetrics, LearnError> {
    if test.is_empty() {
        return Err(LearnError::EmptyInput("test split is empty".into()));
    }
    let scores = model.predict_all(&test.rows)?;
    EvalMetrics::from_scores(&scores, &test.labels, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_and_bounded() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(1e6), 1.0);
        assert_eq!(sigmoid(-1e6), 0.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn model_enum_dispatches_by_shape() {
        let ds = LabeledDataset::from_rows(
            (0..40).map(|i| vec![(i % 2) as f64]).collect(),
            (0..40).map(|i| i % 2 == 1).collect(),
        );
        let lr = train_logistic(&ds, &LogisticConfig::default()).unwrap();
        let gb = train_gbdt(
            &ds,
            &GbdtConfig {
                n_rounds: 5,
                early_stopping: None,
                ..Default::default()
            },
        )
        .unwrap();
        for m in [Model::Logistic(lr), Model::Gbdt(gb)] {
            let json = serde_json::to_string(&m).unwrap();
            let back: Model = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m);
            let metrics = evaluate(&back, &ds, 0.5).unwrap();
            assert_eq!(metrics.accuracy, 1.0);
        }
    }
}
