//! Author-level documents: every tweet of a user aggregated into one bag of
//! words over a shared vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::TopicError;
use crate::corpus::Corpus;
use crate::text::tokenize;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

pub fn default_stopwords() -> BTreeSet<String> {
    DEFAULT_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabConfig {
    /// Minimum number of users whose document contains the word.
    pub min_df: usize,
    pub stopwords: BTreeSet<String>,
    /// Documents shorter than this are flagged.
    pub min_tokens: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_df: 5,
            stopwords: default_stopwords(),
            min_tokens: 10,
        }
    }
}

impl VocabConfig {
    /// No stopwords, no frequency cut-off.
    pub fn unfiltered() -> Self {
        Self {
            min_df: 1,
            stopwords: BTreeSet::new(),
            min_tokens: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    pub words: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        Self::new(words)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Self { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDocument {
    pub user_id: String,
    /// Word ids per tweet; tweets with no in-vocabulary word are dropped.
    /// Each segment is sorted and the segment list is sorted, so the document
    /// does not depend on tweet order.
    pub segments: Vec<Vec<u32>>,
    /// Set when the document has fewer tokens than the configured minimum.
    pub flagged: bool,
}

impl UserDocument {
    pub fn from_segments(user_id: impl Into<String>, mut segments: Vec<Vec<u32>>, min_tokens: usize) -> Self {
        segments.retain(|s| !s.is_empty());
        for s in &mut segments {
            s.sort_unstable();
        }
        segments.sort();
        let total: usize = segments.iter().map(Vec::len).sum();
        Self {
            user_id: user_id.into(),
            segments,
            flagged: total < min_tokens,
        }
    }

    pub fn total(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    /// All word ids in ascending order.
    pub fn tokens(&self) -> Vec<u32> {
        let mut t: Vec<u32> = self.segments.iter().flatten().copied().collect();
        t.sort_unstable();
        t
    }

    pub fn counts(&self) -> BTreeMap<u32, usize> {
        let mut c = BTreeMap::new();
        for &w in self.segments.iter().flatten() {
            *c.entry(w).or_insert(0) += 1;
        }
        c
    }
}

/// Builds documents from already-tokenized tweets, one entry per user.
pub fn build_docs_from_words(
    users: &[(String, Vec<Vec<String>>)],
    cfg: &VocabConfig,
) -> Result<(Vec<UserDocument>, Vocabulary), TopicError> {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, tweets) in users {
        let seen: BTreeSet<&str> = tweets
            .iter()
            .flatten()
            .map(String::as_str)
            .filter(|w| !cfg.stopwords.contains(*w))
            .collect();
        for w in seen {
            *df.entry(w).or_insert(0) += 1;
        }
    }
    let words: Vec<String> = df
        .into_iter()
        .filter(|&(_, n)| n >= cfg.min_df)
        .map(|(w, _)| w.to_string())
        .collect();
    if words.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    let vocab = Vocabulary::new(words);
    let docs = users
        .iter()
        .map(|(id, tweets)| {
            let segments = tweets
                .iter()
                .map(|t| t.iter().filter_map(|w| vocab.id(w)).collect())
                .collect();
            UserDocument::from_segments(id.clone(), segments, cfg.min_tokens)
        })
        .collect();
    Ok((docs, vocab))
}

/// One document per profile (in user-id order) from the tweet text, with
/// entities and URLs excluded by the shared tokenizer.
pub fn build_user_docs(corpus: &Corpus, cfg: &VocabConfig) -> Result<(Vec<UserDocument>, Vocabulary), TopicError> {
    let users: Vec<(String, Vec<Vec<String>>)> = corpus
        .profiles
        .keys()
        .map(|id| {
            let tweets = corpus.tweets_of(id).iter().map(|t| tokenize(&t.text).words).collect();
            (id.clone(), tweets)
        })
        .collect();
    build_docs_from_words(&users, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn counts_aggregate_tweets() {
        let users = vec![("u".to_string(), vec![words("a b"), words("b c")])];
        let (docs, vocab) = build_docs_from_words(&users, &VocabConfig::unfiltered()).unwrap();
        assert_eq!(vocab.words, vec!["a", "b", "c"]);
        let c = docs[0].counts();
        assert_eq!(c.values().copied().collect::<Vec<_>>(), vec![1, 2, 1]);
        assert_eq!(docs[0].total(), 4);
        assert!(docs[0].flagged);
    }

    #[test]
    fn min_df_and_stopwords_filter() {
        let users = vec![
            ("u1".to_string(), vec![words("the cat rare")]),
            ("u2".to_string(), vec![words("the cat")]),
        ];
        let cfg = VocabConfig {
            min_df: 2,
            ..VocabConfig::default()
        };
        let (_, vocab) = build_docs_from_words(&users, &cfg).unwrap();
        assert_eq!(vocab.words, vec!["cat"]);
    }

    #[test]
    fn tweet_order_is_irrelevant() {
        let a = vec![("u".to_string(), vec![words("x y"), words("z x")])];
        let b = vec![("u".to_string(), vec![words("x z"), words("y x")])];
        let cfg = VocabConfig::unfiltered();
        assert_eq!(build_docs_from_words(&a, &cfg).unwrap(), build_docs_from_words(&b, &cfg).unwrap());
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let users = vec![("u".to_string(), vec![words("the a")])];
        let cfg = VocabConfig {
            min_df: 1,
            ..VocabConfig::default()
        };
        assert!(matches!(build_docs_from_words(&users, &cfg), Err(TopicError::EmptyVocabulary)));
    }
}
