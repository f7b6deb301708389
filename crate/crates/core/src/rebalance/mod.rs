//! Class rebalancing: SMOTE, ADASYN and SMOTE followed by Tomek-link cleaning.
//!
//! Distances are Euclidean over features standardized with the statistics of
//! the dataset being resampled (the training split). Synthetic rows are
//! interpolated in the original feature units.

pub mod knn;
pub mod smote;
pub mod tomek;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{LabeledDataset, Standardizer};

pub use knn::knn;
pub use smote::{adasyn, adasyn_allocation, smote_sample, AdasynReport};
pub use tomek::{smote_tomek, tomek_links, SmoteTomekReport};

#[derive(Debug, Error)]
pub enum ResampleError {
    #[error("k = {k} but only {available} neighbour candidates are available")]
    KTooLarge { k: usize, available: usize },
    #[error("resampling needs both classes present")]
    SingleClass,
    #[error("dataset contains NaN or infinite values")]
    NonFinite,
    #[error("invalid resampling configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    None,
    Adasyn,
    Smotetomek,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::None, Method::Adasyn, Method::Smotetomek];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Adasyn => "adasyn",
            Method::Smotetomek => "smotetomek",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown resampler {s:?} (expected none, adasyn or smotetomek)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleConfig {
    pub k: usize,
    pub beta: f64,
    pub seed: u64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            k: 5,
            beta: 1.0,
            seed: 0,
        }
    }
}

impl ResampleConfig {
    pub fn validate(&self) -> Result<(), ResampleError> {
        if self.k == 0 {
            return Err(ResampleError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(ResampleError::InvalidConfig(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Label of the smaller class. Ties resolve to `true`.
fn minority_label(ds: &LabeledDataset) -> Result<bool, ResampleError> {
    if !ds.both_classes() || ds.len() < 2 {
        return Err(ResampleError::SingleClass);
    }
    if !ds.all_finite() {
        return Err(ResampleError::NonFinite);
    }
    let (neg, pos) = ds.class_counts();
    Ok(pos <= neg)
}

fn scaled(ds: &LabeledDataset) -> Result<Vec<Vec<f64>>, ResampleError> {
    let z = Standardizer::fit(&ds.rows).transform(&ds.rows);
    if z.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ResampleError::NonFinite);
    }
    Ok(z)
}

fn synthetic_id(n: usize) -> String {
    format!("synthetic-{n:06}")
}

/// Applies the chosen method; `None` returns the dataset unchanged.
pub fn resample(ds: &LabeledDataset, method: Method, cfg: &ResampleConfig) -> Result<LabeledDataset, ResampleError> {
    match method {
        Method::None => Ok(ds.clone()),
        Method::Adasyn => adasyn(ds, cfg).map(|(d, _)| d),
        Method::Smotetomek => smote_tomek(ds, cfg).map(|(d, _)| d),
    }
}
