//! Classification metrics.

use serde::{Deserialize, Serialize};

use super::LearnError;

/// Rank-based ROC AUC: the probability that a random positive scores above a
/// random negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, LearnError> {
    if scores.len() != labels.len() {
        return Err(LearnError::LengthMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(LearnError::NonFinite("score is NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(labels[a].cmp(&labels[b])));
    // Sum over tie groups of (negatives strictly below) + half the tied negatives.
    let mut concordant = 0.0f64;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0usize, 0usize);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        concordant += pos as f64 * (neg_below as f64 + 0.5 * neg as f64);
        neg_below += neg;
        i = j;
    }
    Ok(concordant / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], labels: &[bool]) -> Self {
        let mut c = Self::default();
        for (&p, &y) in predicted.iter().zip(labels) {
            match (p, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Point metrics for the positive (verified) class plus macro and
/// support-weighted averages over both classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    #[serde(rename = "Precision")]
    pub precision: f64,
    #[serde(rename = "Recall")]
    pub recall: f64,
    #[serde(rename = "F1-Score")]
    pub f1: f64,
    #[serde(rename = "Accuracy")]
    pub accuracy: f64,
    /// `None` when the evaluated set holds a single class.
    #[serde(rename = "ROC AUC Score")]
    pub roc_auc: Option<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub confusion: Confusion,
}

impl EvalMetrics {
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Self, LearnError> {
        if scores.is_empty() {
            return Err(LearnError::EmptyInput("evaluation set is empty".into()));
        }
        if scores.len() != labels.len() {
            return Err(LearnError::LengthMismatch {
                expected: labels.len(),
                got: scores.len(),
            });
        }
        let predicted: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
        let c = Confusion::from_predictions(&predicted, labels);
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let neg_precision = ratio(c.tn, c.tn + c.fn_);
        let neg_recall = ratio(c.tn, c.tn + c.fp);
        let f1 = harmonic(precision, recall);
        let neg_f1 = harmonic(neg_precision, neg_recall);
        let n = c.total() as f64;
        let w_pos = (c.tp + c.fn_) as f64 / n;
        let w_neg = 1.0 - w_pos;
        let roc_auc = match roc_auc(scores, labels) {
            Ok(a) => Some(a),
            Err(LearnError::SingleClass) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            precision,
            recall,
            f1,
            accuracy: (c.tp + c.tn) as f64 / n,
            roc_auc,
            macro_precision: 0.5 * (precision + neg_precision),
            macro_recall: 0.5 * (recall + neg_recall),
            macro_f1: 0.5 * (f1 + neg_f1),
            weighted_precision: w_pos * precision + w_neg * neg_precision,
            weighted_recall: w_pos * recall + w_neg * neg_recall,
            weighted_f1: w_pos * f1 + w_neg * neg_f1,
            confusion: c,
        })
    }
}
