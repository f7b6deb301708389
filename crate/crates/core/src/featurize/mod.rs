//! Per-user feature extraction into a fixed, named registry.
//!
//! Families, in registry order: metadata (5), content (35), temporal (10),
//! external scores (8) and, when a topic model is supplied, one entry per
//! topic. Extraction never reads the `verified` label.

pub mod content;
pub mod pos;
pub mod sentiment;
pub mod temporal;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, ExternalScores, UserProfile};
use crate::dataset::LabeledDataset;

pub use pos::{PosLexicon, PosTag};
pub use sentiment::{SentimentLexicon, SentimentScores};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("feature length mismatch: registry has {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Metadata,
    Content,
    Temporal,
    External,
    Topic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub family: FeatureFamily,
    pub default_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRegistry {
    pub features: Vec<FeatureSpec>,
}

pub const METADATA_NAMES: [&str; 5] = [
    "followers_count",
    "friends_count",
    "statuses_count",
    "listed_count",
    "account_age_days",
];

pub fn topic_feature_name(t: usize) -> String {
    format!("topic_{t:03}")
}

impl FeatureRegistry {
    /// Metadata, content, temporal and external families.
    pub fn standard() -> Self {
        let mut features = Vec::new();
        let mut push = |name: &str, family, default_value| {
            features.push(FeatureSpec {
                name: name.to_string(),
                family,
                default_value,
            })
        };
        for n in METADATA_NAMES {
            push(n, FeatureFamily::Metadata, 0.0);
        }
        for n in content::names() {
            let default = if n == "sentiment_neutral" { 1.0 } else { 0.0 };
            push(&n, FeatureFamily::Content, default);
        }
        for n in temporal::NAMES {
            push(n, FeatureFamily::Temporal, 0.0);
        }
        for n in ExternalScores::NAMES {
            push(n, FeatureFamily::External, 0.0);
        }
        Self { features }
    }

    pub fn with_topics(mut self, topics: usize) -> Self {
        for t in 0..topics {
            self.features.push(FeatureSpec {
                name: topic_feature_name(t),
                family: FeatureFamily::Topic,
                default_value: 1.0 / topics as f64,
            });
        }
        self
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn indices_of(&self, family: FeatureFamily) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.features[i].family == family)
            .collect()
    }

    pub fn topic_count(&self) -> usize {
        self.indices_of(FeatureFamily::Topic).len()
    }

    fn defaults(&self, family: FeatureFamily) -> Vec<f64> {
        self.features
            .iter()
            .filter(|f| f.family == family)
            .map(|f| f.default_value)
            .collect()
    }
}

/// One user's features aligned with a [`FeatureRegistry`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub user_id: String,
    pub values: Vec<f64>,
    pub label: bool,
    /// True where the value was imputed or defaulted.
    pub missing: Vec<bool>,
}

impl FeatureVector {
    pub fn missing_string(&self) -> String {
        self.missing.iter().map(|&m| if m { '1' } else { '0' }).collect()
    }
}

pub fn metadata_features(profile: &UserProfile, snapshot: DateTime<Utc>) -> [f64; 5] {
    let age_days = (snapshot - profile.created_at).num_seconds().div_euclid(86_400);
    [
        profile.followers_count as f64,
        profile.friends_count as f64,
        profile.statuses_count as f64,
        profile.listed_count as f64,
        age_days as f64,
    ]
}

/// Sentiment and POS lexicons used by content extraction.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub sentiment: SentimentLexicon,
    pub pos: PosLexicon,
}

/// Imputation statistics computed from the training partition only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationStats {
    pub external_medians: [f64; 8],
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    })
}

impl ImputationStats {
    pub fn from_training<'a>(corpus: &Corpus, train_ids: impl IntoIterator<Item = &'a str>) -> Self {
        let present: Vec<[f64; 8]> = train_ids
            .into_iter()
            .filter_map(|id| corpus.external.get(id))
            .map(ExternalScores::values)
            .collect();
        let mut external_medians = [0.0; 8];
        for (j, m) in external_medians.iter_mut().enumerate() {
            *m = median(present.iter().map(|v| v[j]).collect()).unwrap_or(0.0);
        }
        Self { external_medians }
    }
}

/// Per-user topic proportions plus the users whose vector is a fallback.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicBlock {
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub masked: BTreeSet<String>,
}

fn user_vector(
    corpus: &Corpus,
    registry: &FeatureRegistry,
    lexicons: &Lexicons,
    topics: Option<&TopicBlock>,
    imputation: &ImputationStats,
    profile: &UserProfile,
) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(registry.len());
    let mut missing = Vec::with_capacity(registry.len());
    let mut push_block = |block: Option<Vec<f64>>, defaults: Vec<f64>| {
        match block {
            Some(v) => {
                missing.extend(std::iter::repeat_n(false, v.len()));
                values.extend(v);
            }
            None => {
                missing.extend(std::iter::repeat_n(true, defaults.len()));
                values.extend(defaults);
            }
        }
        values.len()
    };
    let id = profile.user_id.as_str();
    push_block(
        Some(metadata_features(profile, corpus.dates.snapshot).to_vec()),
        vec![],
    );
    push_block(
        content::content_features(corpus.tweets_of(id), &lexicons.pos, &lexicons.sentiment),
        registry.defaults(FeatureFamily::Content),
    );
    push_block(
        corpus
            .series
            .get(id)
            .and_then(|s| temporal::temporal_features(s, &corpus.dates)),
        registry.defaults(FeatureFamily::Temporal),
    );
    let filled = push_block(
        corpus.external.get(id).map(|e| e.values().to_vec()),
        imputation.external_medians.to_vec(),
    );
    let n_topics = registry.topic_count();
    if n_topics > 0 {
        let block = topics.ok_or(FeatureError::LengthMismatch {
            expected: registry.len(),
            got: filled,
        })?;
        let v = block.vectors.get(id).filter(|_| !block.masked.contains(id));
        if let Some(v) = v {
            if v.len() != n_topics {
                return Err(FeatureError::LengthMismatch {
                    expected: n_topics,
                    got: v.len(),
                });
            }
        }
        push_block(v.cloned(), registry.defaults(FeatureFamily::Topic));
    }
    if values.len() != registry.len() {
        return Err(FeatureError::LengthMismatch {
            expected: registry.len(),
            got: values.len(),
        });
    }
    Ok(FeatureVector {
        user_id: profile.user_id.clone(),
        values,
        label: profile.verified,
        missing,
    })
}

/// One vector per profile, in user-id order.
pub fn assemble_features(
    corpus: &Corpus,
    registry: &FeatureRegistry,
    lexicons: &Lexicons,
    topics: Option<&TopicBlock>,
    imputation: &ImputationStats,
) -> Result<Vec<FeatureVector>, FeatureError> {
    let profiles: Vec<&UserProfile> = corpus.profiles.values().collect();
    profiles
        .par_iter()
        .map(|p| user_vector(corpus, registry, lexicons, topics, imputation, p))
        .collect()
}

pub fn to_dataset(registry: &FeatureRegistry, vectors: &[FeatureVector]) -> LabeledDataset {
    let mut ds = LabeledDataset::from_rows(
        vectors.iter().map(|v| v.values.clone()).collect(),
        vectors.iter().map(|v| v.label).collect(),
    );
    if ds.is_empty() {
        ds.feature_names = registry.names();
    } else {
        ds = ds.with_names(registry.names());
    }
    ds.ids = vectors.iter().map(|v| v.user_id.clone()).collect();
    ds
}
