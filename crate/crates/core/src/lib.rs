//! Verification-status analysis over social-platform account corpora.
//!
//! The crate is organised as a batch pipeline:
//!
//! - [`corpus`] ingests profiles, tweets, account time series and externally
//!   supplied scores from JSON Lines files.
//! - [`featurize`] turns each account into a named, ordered feature vector
//!   (metadata, content, temporal, external and topic families).
//! - [`rebalance`] corrects class imbalance with SMOTE, ADASYN and Tomek-link
//!   cleaning.
//! - [`learn`] trains logistic regression and gradient-boosted trees, computes
//!   evaluation metrics, impurity importances and all-relevant selection.
//! - [`cluster`] runs K-Means++ over the most discriminative features and
//!   profiles each cluster.
//! - [`topics`] fits an author-level LDA model by collapsed Gibbs sampling and
//!   estimates per-account topical span with a Dirichlet-process mixture.
//!
//! [`demo`] generates a synthetic corpus with class-conditional structure so
//! the whole pipeline can be exercised without external data.

pub mod cluster;
pub mod corpus;
pub mod dataset;
pub mod demo;
pub mod featurize;
pub mod learn;
pub mod rebalance;
pub mod seed;
pub mod text;
pub mod topics;

pub use corpus::{Corpus, CorpusDates, IngestionReport};
pub use dataset::{LabeledDataset, Provenance, Standardizer};
pub use featurize::{FeatureRegistry, FeatureVector};
