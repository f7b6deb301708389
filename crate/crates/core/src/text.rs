//! Tweet text grammar: entity extraction and word/sentence tokenization.
//!
//! The grammar is fixed so that counts are reproducible:
//!
//! - hashtag: `#` followed by one or more word characters, not preceded by a
//!   word character;
//! - mention: `@` followed by one or more word characters, same rule;
//! - URL: a whitespace-delimited token starting with `http://` or `https://`;
//! - retweet: text starting with `RT @`.
//!
//! Words are maximal runs of letters, digits and apostrophes, lowercased, with
//! entities and URLs removed first. Sentences split on runs of `.`, `!`, `?`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entities {
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub urls: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokens {
    pub words: Vec<String>,
    pub sentences: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn is_url(token: &str) -> bool {
    token.starts_with("http://") || token.starts_with("https://")
}

pub fn is_retweet_text(text: &str) -> bool {
    text.starts_with("RT @")
}

/// Byte spans of hashtags/mentions inside a non-URL token, with the sigil.
fn entity_spans(token: &str) -> Vec<(usize, usize, char)> {
    let chars: Vec<(usize, char)> = token.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        let sigil = c == '#' || c == '@';
        let free = i == 0 || !is_word_char(chars[i - 1].1);
        if sigil && free && i + 1 < chars.len() && is_word_char(chars[i + 1].1) {
            let mut j = i + 1;
            while j < chars.len() && is_word_char(chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(token.len(), |(b, _)| *b);
            spans.push((start, end, c));
            i = j;
        } else {
            i += 1;
        }
    }
    spans
}

pub fn extract_entities(text: &str) -> Entities {
    let mut out = Entities::default();
    for token in text.split_whitespace() {
        if is_url(token) {
            out.urls.push(token.to_string());
            continue;
        }
        for (start, end, sigil) in entity_spans(token) {
            let name = token[start + 1..end].to_string();
            if sigil == '#' {
                out.hashtags.push(name);
            } else {
                out.mentions.push(name);
            }
        }
    }
    out
}

/// Text with URLs and entity spans blanked out.
fn strip_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for token in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        if is_url(token) {
            continue;
        }
        let mut last = 0;
        for (start, end, _) in entity_spans(token) {
            out.push_str(&token[last..start]);
            out.push(' ');
            last = end;
        }
        out.push_str(&token[last..]);
    }
    out
}

fn push_words(segment: &str, words: &mut Vec<String>) -> usize {
    let before = words.len();
    for run in segment.split(|c: char| !(c.is_alphanumeric() || c == '\'')) {
        let run = run.trim_matches('\'');
        if !run.is_empty() {
            words.push(run.to_lowercase());
        }
    }
    words.len() - before
}

pub fn tokenize(text: &str) -> Tokens {
    if text.trim().is_empty() {
        return Tokens::default();
    }
    let cleaned = strip_entities(text);
    let mut words = Vec::new();
    let mut sentences = 0;
    for segment in cleaned.split(['.', '!', '?']) {
        if push_words(segment, &mut words) > 0 {
            sentences += 1;
        }
    }
    Tokens {
        words,
        sentences: sentences.max(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retweet_entities_golden() {
        let text = "RT @bob: hi #news http://x.y";
        assert!(is_retweet_text(text));
        let e = extract_entities(text);
        assert_eq!(e.mentions, vec!["bob"]);
        assert_eq!(e.hashtags, vec!["news"]);
        assert_eq!(e.urls, vec!["http://x.y"]);
    }

    #[test]
    fn sigil_inside_word_is_not_an_entity() {
        let e = extract_entities("mail me at a@b.com or c#sharp # @ #_ok");
        assert!(e.mentions.is_empty());
        assert_eq!(e.hashtags, vec!["_ok"]);
    }

    #[test]
    fn url_fragments_are_not_hashtags() {
        let e = extract_entities("see https://x.y/#frag");
        assert!(e.hashtags.is_empty());
        assert_eq!(e.urls.len(), 1);
    }

    #[test]
    fn tokenize_examples() {
        let t = tokenize("Hello world.");
        assert_eq!(t.words, vec!["hello", "world"]);
        assert_eq!(t.sentences, 1);

        assert_eq!(tokenize(""), Tokens::default());

        let t = tokenize("Go! Now http://a.b");
        assert_eq!(t.words, vec!["go", "now"]);
        assert_eq!(t.sentences, 2);
    }

    #[test]
    fn tokenize_drops_entities_and_keeps_apostrophes() {
        let t = tokenize("RT @bob: don't stop #news... 'quoted' 2018!!");
        assert_eq!(t.words, vec!["rt", "don't", "stop", "quoted", "2018"]);
        assert_eq!(t.sentences, 2);
    }

    #[test]
    fn url_only_text_has_one_sentence() {
        let t = tokenize("http://a.b");
        assert!(t.words.is_empty());
        assert_eq!(t.sentences, 1);
    }
}
