//! Lexicon sentiment scoring with negation and intensity modifiers.
//!
//! Each lexicon word contributes its valence, adjusted by modifiers seen since
//! the previous lexicon word: boosters push the valence away from zero by
//! [`BOOST`], dampeners pull it towards zero by the same amount, and a
//! negation scales it by [`NEGATION_SCALE`]. The summed valence `s` of a tweet
//! is squashed to `s / sqrt(s^2 + 15)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::corpus::TweetRecord;
use crate::text;

pub const NEGATION_SCALE: f64 = -0.74;
pub const BOOST: f64 = 0.293;
pub const COMPOUND_ALPHA: f64 = 15.0;
pub const MAX_VALENCE: f64 = 4.0;

const DEFAULT_TSV: &str = include_str!("../../data/sentiment.tsv");

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LexiconEntry {
    Valence(f64),
    Negation,
    Booster,
    Dampener,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    entries: HashMap<String, LexiconEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
    pub compound: f64,
}

impl SentimentScores {
    pub const NEUTRAL: Self = Self {
        positive: 0.0,
        negative: 0.0,
        neutral: 1.0,
        compound: 0.0,
    };
}

pub fn normalize_compound(sum: f64) -> f64 {
    if sum.is_infinite() {
        return sum.signum();
    }
    sum / (sum * sum + COMPOUND_ALPHA).sqrt()
}

impl SentimentLexicon {
    /// Parses `token<TAB>value` lines where value is a valence in [-4, 4] or
    /// one of `negation`, `booster`, `dampener`. `#` starts a comment line.
    pub fn parse_tsv(src: &str) -> Result<Self, FeatureError> {
        let mut entries = HashMap::new();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| FeatureError::Lexicon {
                line: i + 1,
                message: msg.to_string(),
            };
            let (token, value) = line.split_once('\t').ok_or_else(|| bad("expected token<TAB>value"))?;
            let entry = match value.trim() {
                "negation" => LexiconEntry::Negation,
                "booster" => LexiconEntry::Booster,
                "dampener" => LexiconEntry::Dampener,
                v => {
                    let x: f64 = v.parse().map_err(|_| bad("valence is not a number"))?;
                    if !x.is_finite() || x.abs() > MAX_VALENCE {
                        return Err(bad("valence outside [-4, 4]"));
                    }
                    LexiconEntry::Valence(x)
                }
            };
            entries.insert(token.trim().to_lowercase(), entry);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, token: &str) -> Option<LexiconEntry> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adjusted valence per word, zero for non-lexicon and modifier words.
    pub fn adjusted_valences(&self, words: &[String]) -> Vec<f64> {
        let mut out = Vec::with_capacity(words.len());
        let mut negated = false;
        let mut boost = 0.0;
        for w in words {
            match self.get(w) {
                Some(LexiconEntry::Valence(v)) => {
                    let mut v = v;
                    if boost != 0.0 && v != 0.0 {
                        v += boost * v.signum();
                    }
                    if negated {
                        v *= NEGATION_SCALE;
                    }
                    out.push(v);
                    negated = false;
                    boost = 0.0;
                }
                Some(LexiconEntry::Negation) => {
                    negated = !negated;
                    out.push(0.0);
                }
                Some(LexiconEntry::Booster) => {
                    boost += BOOST;
                    out.push(0.0);
                }
                Some(LexiconEntry::Dampener) => {
                    boost -= BOOST;
                    out.push(0.0);
                }
                None => out.push(0.0),
            }
        }
        out
    }

    /// Scores one word sequence. The triple sums to one; an empty sequence is
    /// fully neutral.
    pub fn score_words(&self, words: &[String]) -> SentimentScores {
        let valences = self.adjusted_valences(words);
        let mut pos = 0.0;
        let mut neg = 0.0;
        let mut neu = 0.0;
        for &v in &valences {
            if v > 0.0 {
                pos += v + 1.0;
            } else if v < 0.0 {
                neg += 1.0 - v;
            } else {
                neu += 1.0;
            }
        }
        let total = pos + neg + neu;
        if total == 0.0 {
            return SentimentScores::NEUTRAL;
        }
        SentimentScores {
            positive: pos / total,
            negative: neg / total,
            neutral: neu / total,
            compound: normalize_compound(valences.iter().sum()),
        }
    }

    /// User-level scores: per-tweet scores averaged with weights equal to the
    /// tweet's word count.
    pub fn score_tweets(&self, tweets: &[TweetRecord]) -> SentimentScores {
        let mut acc = [0.0; 4];
        let mut weight = 0.0;
        for t in tweets {
            let words = text::tokenize(&t.text).words;
            if words.is_empty() {
                continue;
            }
            let s = self.score_words(&words);
            let len = words.len() as f64;
            acc[0] += len * s.positive;
            acc[1] += len * s.negative;
            acc[2] += len * s.neutral;
            acc[3] += len * s.compound;
            weight += len;
        }
        if weight == 0.0 {
            return SentimentScores::NEUTRAL;
        }
        SentimentScores {
            positive: acc[0] / weight,
            negative: acc[1] / weight,
            neutral: acc[2] / weight,
            compound: acc[3] / weight,
        }
    }
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        Self::parse_tsv(DEFAULT_TSV).expect("bundled sentiment lexicon parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(s: &str) -> Vec<String> {
        text::tokenize(s).words
    }

    fn tweet(text: &str) -> TweetRecord {
        TweetRecord {
            user_id: "u".into(),
            tweet_id: "t".into(),
            created_at: "2018-01-01T00:00:00Z".parse().unwrap(),
            text: text.into(),
            is_retweet: false,
            hashtags: vec![],
            mentions: vec![],
            urls: vec![],
        }
    }

    #[test]
    fn bundled_lexicon_is_bounded() {
        let lex = SentimentLexicon::default();
        assert!(lex.len() > 100);
        for e in lex.entries.values() {
            if let LexiconEntry::Valence(v) = e {
                assert!(v.abs() <= MAX_VALENCE);
            }
        }
    }

    #[test]
    fn no_lexicon_words_is_neutral() {
        let lex = SentimentLexicon::default();
        let s = lex.score_tweets(&[tweet("the table and a chair"), tweet("")]);
        assert_eq!(s, SentimentScores::NEUTRAL);
        assert_eq!(lex.score_tweets(&[]), SentimentScores::NEUTRAL);
    }

    #[test]
    fn compound_limits() {
        assert_eq!(normalize_compound(0.0), 0.0);
        assert!(normalize_compound(1e6) > 0.999_999);
        assert_eq!(normalize_compound(f64::INFINITY), 1.0);
        assert!((normalize_compound(1.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn modifiers_adjust_following_lexicon_word() {
        let lex = SentimentLexicon::parse_tsv("good\t2\nnot\tnegation\nvery\tbooster\nslightly\tdampener\n")
            .unwrap();
        assert_eq!(lex.adjusted_valences(&words("good")), vec![2.0]);
        assert_eq!(lex.adjusted_valences(&words("not good")), vec![0.0, 2.0 * NEGATION_SCALE]);
        let boosted = lex.adjusted_valences(&words("very the good"));
        assert!((boosted[2] - (2.0 + BOOST)).abs() < 1e-12);
        let damp = lex.adjusted_valences(&words("slightly good good"));
        assert!((damp[1] - (2.0 - BOOST)).abs() < 1e-12);
        assert_eq!(damp[2], 2.0);
        let both = lex.adjusted_valences(&words("not very good"));
        assert!((both[2] - (2.0 + BOOST) * NEGATION_SCALE).abs() < 1e-12);
    }

    #[test]
    fn symmetric_tweets_cancel() {
        let lex = SentimentLexicon::parse_tsv("up\t2\ndown\t-2\n").unwrap();
        let a = "up x x x x x x x x x";
        let b = "down x x x x x x x x x";
        let s = lex.score_tweets(&[tweet(a), tweet(b)]);
        assert!(s.compound.abs() < 1e-15);
        assert!((s.positive - s.negative).abs() < 1e-15);
    }

    #[test]
    fn weights_follow_word_count() {
        let lex = SentimentLexicon::parse_tsv("up\t2\n").unwrap();
        // one long neutral tweet and one short positive one
        let s = lex.score_tweets(&[tweet("up"), tweet("a b c")]);
        let c = normalize_compound(2.0);
        assert!((s.compound - c * 1.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_lexicon_lines_are_rejected() {
        assert!(SentimentLexicon::parse_tsv("good 2\n").is_err());
        assert!(SentimentLexicon::parse_tsv("good\tfive\n").is_err());
        assert!(SentimentLexicon::parse_tsv("good\t4.5\n").is_err());
    }

    proptest! {
        #[test]
        fn triple_sums_to_one(ws in proptest::collection::vec("[a-z]{1,8}|good|bad|not|very|love|hate", 0..30)) {
            let lex = SentimentLexicon::default();
            let words: Vec<String> = ws;
            let s = lex.score_words(&words);
            prop_assert!((s.positive + s.negative + s.neutral - 1.0).abs() < 1e-9);
            prop_assert!(s.compound > -1.0 && s.compound < 1.0);
            for v in [s.positive, s.negative, s.neutral] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn compound_is_increasing(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            prop_assume!(a < b);
            prop_assert!(normalize_compound(a) <= normalize_compound(b));
            prop_assert!(normalize_compound(a).abs() < 1.0);
        }
    }
}
