//! Linguistic, stylistic and entity-usage features over a user's tweets.

use std::collections::HashMap;

use super::pos::{PosLexicon, PosTag};
use super::sentiment::SentimentLexicon;
use crate::corpus::TweetRecord;
use crate::text;

/// Words with more than this many letters are long.
pub const LONG_WORD_LETTERS: usize = 6;

pub fn names() -> Vec<String> {
    let mut names = Vec::with_capacity(35);
    names.extend(PosTag::ALL.iter().map(|t| format!("pos_count_{}", t.name())));
    names.extend(PosTag::ALL.iter().map(|t| format!("pos_freq_{}", t.name())));
    for n in [
        "avg_words_per_sentence",
        "avg_words_per_tweet",
        "char_entropy",
        "long_word_count",
        "long_word_proportion",
        "hashtag_freq",
        "retweet_freq",
        "mention_freq",
        "url_freq",
        "hashtag_count",
        "retweet_count",
        "mention_count",
        "url_count",
        "sentiment_positive",
        "sentiment_negative",
        "sentiment_neutral",
        "sentiment_compound",
    ] {
        names.push(n.to_string());
    }
    names
}

/// Shannon entropy in bits of the character distribution of `s`.
pub fn char_entropy<'a>(parts: impl IntoIterator<Item = &'a str>) -> f64 {
    let mut counts: HashMap<char, usize> = HashMap::new();
    let mut total = 0usize;
    for part in parts {
        for c in part.chars() {
            *counts.entry(c).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let mut freqs: Vec<usize> = counts.into_values().collect();
    // fixed summation order
    freqs.sort_unstable();
    -freqs
        .into_iter()
        .map(|c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

pub fn is_long_word(word: &str) -> bool {
    word.chars().filter(|c| c.is_alphabetic()).count() > LONG_WORD_LETTERS
}

/// Values aligned with [`names`], or `None` when the user has no tweets.
pub fn content_features(
    tweets: &[TweetRecord],
    pos: &PosLexicon,
    sentiment: &SentimentLexicon,
) -> Option<Vec<f64>> {
    if tweets.is_empty() {
        return None;
    }
    let mut words: Vec<String> = Vec::new();
    let mut sentences = 0usize;
    for t in tweets {
        let tok = text::tokenize(&t.text);
        sentences += tok.sentences;
        words.extend(tok.words);
    }
    let n_tweets = tweets.len() as f64;
    let n_words = words.len() as f64;
    let tag_counts = pos.count_tags(&words);
    let long = words.iter().filter(|w| is_long_word(w)).count() as f64;

    let hashtags: usize = tweets.iter().map(|t| t.hashtags.len()).sum();
    let mentions: usize = tweets.iter().map(|t| t.mentions.len()).sum();
    let urls: usize = tweets.iter().map(|t| t.urls.len()).sum();
    let retweets = tweets.iter().filter(|t| t.is_retweet).count();

    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };

    let mut out = Vec::with_capacity(35);
    out.extend(tag_counts.iter().map(|&c| c as f64));
    out.extend(tag_counts.iter().map(|&c| ratio(c as f64, n_words)));
    out.push(ratio(n_words, sentences as f64));
    out.push(n_words / n_tweets);
    out.push(char_entropy(tweets.iter().map(|t| t.text.as_str())));
    out.push(long);
    out.push(ratio(long, n_words));
    out.push(hashtags as f64 / n_tweets);
    out.push(retweets as f64 / n_tweets);
    out.push(mentions as f64 / n_tweets);
    out.push(urls as f64 / n_tweets);
    out.push(hashtags as f64);
    out.push(retweets as f64);
    out.push(mentions as f64);
    out.push(urls as f64);
    let s = sentiment.score_tweets(tweets);
    out.extend([s.positive, s.negative, s.neutral, s.compound]);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(text: &str, rt: bool, hashtags: usize) -> TweetRecord {
        TweetRecord {
            user_id: "u".into(),
            tweet_id: "t".into(),
            created_at: "2018-01-01T00:00:00Z".parse().unwrap(),
            text: text.into(),
            is_retweet: rt,
            hashtags: (0..hashtags).map(|i| format!("h{i}")).collect(),
            mentions: vec![],
            urls: vec![],
        }
    }

    fn feature(values: &[f64], name: &str) -> f64 {
        let i = names().iter().position(|n| n == name).unwrap();
        values[i]
    }

    #[test]
    fn single_symbol_has_zero_entropy() {
        assert_eq!(char_entropy(["aaaa"]), 0.0);
        assert_eq!(char_entropy(Vec::<&str>::new()), 0.0);
    }

    #[test]
    fn uniform_alphabet_entropy_is_log2_k() {
        for k in 1..=40u32 {
            let s: String = (0..k).map(|i| char::from_u32(0x41 + i).unwrap()).collect();
            let s = s.repeat(3);
            assert!((char_entropy([s.as_str()]) - f64::from(k).log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn long_word_proportion() {
        let v = content_features(
            &[tweet("go now tomorrow", false, 0)],
            &PosLexicon::default(),
            &SentimentLexicon::default(),
        )
        .unwrap();
        assert_eq!(feature(&v, "long_word_count"), 1.0);
        assert!((feature(&v, "long_word_proportion") - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn entity_frequencies_are_per_tweet() {
        let tweets = vec![
            tweet("a", true, 1),
            tweet("b", false, 1),
            tweet("c", false, 0),
            tweet("d", false, 0),
        ];
        let v = content_features(&tweets, &PosLexicon::default(), &SentimentLexicon::default()).unwrap();
        assert_eq!(feature(&v, "retweet_freq"), 0.25);
        assert_eq!(feature(&v, "hashtag_freq"), 0.5);
        assert_eq!(feature(&v, "hashtag_count"), 2.0);
        assert_eq!(feature(&v, "retweet_count"), 1.0);
    }

    #[test]
    fn no_tweets_gives_none() {
        assert!(content_features(&[], &PosLexicon::default(), &SentimentLexicon::default()).is_none());
    }

    #[test]
    fn pos_frequencies_sum_to_one() {
        let v = content_features(
            &[tweet("The quick fox jumped over it. We love it!", false, 0)],
            &PosLexicon::default(),
            &SentimentLexicon::default(),
        )
        .unwrap();
        let s: f64 = names()
            .iter()
            .zip(&v)
            .filter(|(n, _)| n.starts_with("pos_freq_"))
            .map(|(_, x)| x)
            .sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(feature(&v, "avg_words_per_sentence"), 4.5);
    }

    #[test]
    fn doubling_tweets_keeps_ratios_and_doubles_counts() {
        let base = vec![
            tweet("Loving this #sunny day! http://x.y", false, 1),
            tweet("RT @amy: terrible traffic again.", true, 0),
            tweet("Meeting the committee tomorrow", false, 0),
        ];
        let doubled: Vec<_> = base.iter().chain(base.iter()).cloned().collect();
        let (p, s) = (PosLexicon::default(), SentimentLexicon::default());
        let a = content_features(&base, &p, &s).unwrap();
        let b = content_features(&doubled, &p, &s).unwrap();
        for ((name, x), y) in names().iter().zip(&a).zip(&b) {
            let is_count = name.contains("_count");
            if is_count {
                assert!((2.0 * x - y).abs() < 1e-9, "{name}");
            } else {
                assert!((x - y).abs() < 1e-9, "{name}: {x} vs {y}");
            }
        }
    }
}
