//! Closed-class part-of-speech tagging: lexicon lookup, then suffix rules,
//! then noun.

use std::collections::HashMap;

use super::FeatureError;

const DEFAULT_TSV: &str = include_str!("../../data/pos.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosTag {
    Noun,
    PersonalPronoun,
    ImpersonalPronoun,
    Adjective,
    Adverb,
    Verb,
    AuxiliaryVerb,
    Preposition,
    Article,
}

impl PosTag {
    pub const ALL: [PosTag; 9] = [
        PosTag::Noun,
        PosTag::PersonalPronoun,
        PosTag::ImpersonalPronoun,
        PosTag::Adjective,
        PosTag::Adverb,
        PosTag::Verb,
        PosTag::AuxiliaryVerb,
        PosTag::Preposition,
        PosTag::Article,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosTag::Noun => "noun",
            PosTag::PersonalPronoun => "personal_pronoun",
            PosTag::ImpersonalPronoun => "impersonal_pronoun",
            PosTag::Adjective => "adjective",
            PosTag::Adverb => "adverb",
            PosTag::Verb => "verb",
            PosTag::AuxiliaryVerb => "auxiliary_verb",
            PosTag::Preposition => "preposition",
            PosTag::Article => "article",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

const SUFFIX_RULES: [(&str, PosTag); 5] = [
    ("ly", PosTag::Adverb),
    ("ing", PosTag::Verb),
    ("ed", PosTag::Verb),
    ("ous", PosTag::Adjective),
    ("ful", PosTag::Adjective),
];

/// Suffix rules need at least this many characters left after the suffix.
const MIN_STEM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PosLexicon {
    tags: HashMap<String, PosTag>,
}

impl PosLexicon {
    pub fn parse_tsv(src: &str) -> Result<Self, FeatureError> {
        let mut tags = HashMap::new();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| FeatureError::Lexicon {
                line: i + 1,
                message: msg.to_string(),
            };
            let (token, tag) = line.split_once('\t').ok_or_else(|| bad("expected token<TAB>tag"))?;
            let tag = PosTag::parse(tag.trim()).ok_or_else(|| bad("unknown tag"))?;
            tags.insert(token.trim().to_lowercase(), tag);
        }
        Ok(Self { tags })
    }

    pub fn tag(&self, word: &str) -> PosTag {
        if let Some(&t) = self.tags.get(word) {
            return t;
        }
        let chars = word.chars().count();
        for (suffix, tag) in SUFFIX_RULES {
            if word.ends_with(suffix) && chars >= suffix.len() + MIN_STEM {
                return tag;
            }
        }
        PosTag::Noun
    }

    /// Tag counts indexed by [`PosTag::index`].
    pub fn count_tags<'a>(&self, words: impl IntoIterator<Item = &'a String>) -> [usize; 9] {
        let mut counts = [0; 9];
        for w in words {
            counts[self.tag(w).index()] += 1;
        }
        counts
    }
}

impl Default for PosLexicon {
    fn default() -> Self {
        Self::parse_tsv(DEFAULT_TSV).expect("bundled POS lexicon parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_then_suffix_then_noun() {
        let lex = PosLexicon::default();
        assert_eq!(lex.tag("the"), PosTag::Article);
        assert_eq!(lex.tag("we"), PosTag::PersonalPronoun);
        assert_eq!(lex.tag("it"), PosTag::ImpersonalPronoun);
        assert_eq!(lex.tag("with"), PosTag::Preposition);
        assert_eq!(lex.tag("should"), PosTag::AuxiliaryVerb);
        assert_eq!(lex.tag("quickly"), PosTag::Adverb);
        assert_eq!(lex.tag("jumping"), PosTag::Verb);
        assert_eq!(lex.tag("walked"), PosTag::Verb);
        assert_eq!(lex.tag("famous"), PosTag::Adjective);
        assert_eq!(lex.tag("hopeful"), PosTag::Adjective);
        assert_eq!(lex.tag("bed"), PosTag::Noun);
        assert_eq!(lex.tag("keyboard"), PosTag::Noun);
    }

    #[test]
    fn counts_cover_every_word() {
        let lex = PosLexicon::default();
        let words: Vec<String> = "the cat quickly jumped over it".split(' ').map(String::from).collect();
        let counts = lex.count_tags(&words);
        assert_eq!(counts.iter().sum::<usize>(), words.len());
    }

    #[test]
    fn unknown_tag_is_rejected() {
        assert!(PosLexicon::parse_tsv("x\tinterjection\n").is_err());
    }
}
