//! Author-level topic modelling and per-user topical span.

pub mod docs;
pub mod lda;
pub mod span;

use thiserror::Error;

pub use docs::{build_docs_from_words, build_user_docs, default_stopwords, UserDocument, VocabConfig, Vocabulary};
pub use lda::{
    fold_in, lda_gibbs, lda_gibbs_observed, select_t, topic_features, AlphaMode, CandidateFit, GibbsLda, LdaConfig,
    TopicModel, TopicSelection,
};
pub use span::{topical_span, SpanConfig, SpanEstimate};

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("no document has any in-vocabulary token")]
    EmptyCorpus,
    #[error("topic count must be positive, got {0}")]
    TooFewTopics(usize),
    #[error("no candidate topic counts given")]
    NoCandidates,
    #[error("invalid topic configuration: {0}")]
    InvalidConfig(String),
}
