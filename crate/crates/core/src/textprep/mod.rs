//! Tweet normalization: cleaning, tokenization, stopword removal, PoS
//! tagging and lemmatization.
//!
//! [`Preprocessor::clean`] applies its steps in a fixed order: lowercase,
//! URLs, handles, emoji names, contractions, punctuation, whitespace. With
//! every step enabled the output alphabet is `[a-z0-9#_ ]` and cleaning is
//! idempotent.

mod tagger;

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::assets::{self, parse_table, AssetSource};
use crate::error::AssetError;

pub use tagger::{LexicalTables, PosTag, TaggedToken};

/// Step toggles and table choices for the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub remove_urls: bool,
    pub remove_handles: bool,
    pub translate_emoji: bool,
    pub expand_contractions: bool,
    pub strip_punctuation: bool,
    pub normalize_whitespace: bool,
    pub remove_stopwords: bool,
    pub stopwords: AssetSource,
    pub emoji: AssetSource,
    pub contractions: AssetSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lowercase: true,
            remove_urls: true,
            remove_handles: true,
            translate_emoji: true,
            expand_contractions: true,
            strip_punctuation: true,
            normalize_whitespace: true,
            remove_stopwords: true,
            stopwords: AssetSource::Builtin,
            emoji: AssetSource::Builtin,
            contractions: AssetSource::Builtin,
        }
    }
}

#[derive(Debug)]
struct Tables {
    stopwords: HashSet<String>,
    contractions: HashMap<String, String>,
    emoji: HashMap<String, String>,
    emoji_max_chars: usize,
}

impl Tables {
    fn load(cfg: &PipelineConfig) -> Result<Self, AssetError> {
        let stopwords = parse_table("stopwords", &cfg.stopwords.load(assets::STOPWORDS_EN)?)?
            .into_iter()
            .map(|(k, _)| k.to_lowercase())
            .collect();
        let contractions = parse_table(
            "contractions",
            &cfg.contractions.load(assets::CONTRACTIONS_EN)?,
        )?
        .into_iter()
        .map(|(k, v)| (k.to_lowercase(), v.to_lowercase()))
        .collect();
        let emoji: HashMap<String, String> =
            parse_table("emoji", &cfg.emoji.load(assets::EMOJI_NAMES)?)?
                .into_iter()
                .collect();
        let emoji_max_chars = emoji.keys().map(|k| k.chars().count()).max().unwrap_or(0);
        Ok(Tables {
            stopwords,
            contractions,
            emoji,
            emoji_max_chars,
        })
    }
}

struct Patterns {
    url: Regex,
    handle: Regex,
    word: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        url: Regex::new(r"(?i)(?:https?://|www\.)\S+").unwrap(),
        handle: Regex::new(r"@[\p{L}\p{N}_]+").unwrap(),
        word: Regex::new(r"(?i)#?'?[a-z]+(?:'[a-z]+)*").unwrap(),
    })
}

/// A configured pipeline. Cheap to clone; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PipelineConfig,
    tables: Arc<Tables>,
    lexical: Arc<LexicalTables>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        static DEFAULT: OnceLock<Preprocessor> = OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                Preprocessor::new(PipelineConfig::default()).expect("bundled tables are valid")
            })
            .clone()
    }
}

impl Preprocessor {
    pub fn new(config: PipelineConfig) -> Result<Self, AssetError> {
        Ok(Preprocessor {
            tables: Arc::new(Tables::load(&config)?),
            lexical: LexicalTables::builtin(),
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn clean(&self, text: &str) -> String {
        let cfg = &self.config;
        let p = patterns();
        let mut s = if cfg.lowercase {
            text.to_lowercase()
        } else {
            text.to_string()
        };
        if cfg.remove_urls {
            s = p.url.replace_all(&s, " ").into_owned();
        }
        if cfg.remove_handles {
            s = p.handle.replace_all(&s, " ").into_owned();
        }
        if cfg.translate_emoji {
            s = self.translate_emoji(&s);
        }
        if cfg.expand_contractions {
            s = self.expand_contractions(&s);
        }
        if cfg.strip_punctuation {
            s = strip_punctuation(&s);
        }
        if cfg.normalize_whitespace {
            s = s.split_whitespace().collect::<Vec<_>>().join(" ");
        }
        s
    }

    fn translate_emoji(&self, s: &str) -> String {
        let t = &self.tables;
        if t.emoji.is_empty() {
            return s.to_string();
        }
        let chars: Vec<(usize, char)> = s.char_indices().collect();
        let mut out = String::with_capacity(s.len());
        let mut i = 0;
        'outer: while i < chars.len() {
            if !chars[i].1.is_ascii() {
                for len in (1..=t.emoji_max_chars.min(chars.len() - i)).rev() {
                    let start = chars[i].0;
                    let end = chars.get(i + len).map_or(s.len(), |c| c.0);
                    if let Some(name) = t.emoji.get(&s[start..end]) {
                        out.push(' ');
                        out.push_str(name);
                        out.push(' ');
                        i += len;
                        continue 'outer;
                    }
                }
            }
            out.push(chars[i].1);
            i += 1;
        }
        out
    }

    fn expand_contractions(&self, s: &str) -> String {
        let s = s.replace(['\u{2019}', '\u{2018}', '\u{02BC}'], "'");
        patterns()
            .word
            .replace_all(&s, |caps: &regex::Captures<'_>| {
                let m = &caps[0];
                if m.starts_with('#') {
                    return m.to_string();
                }
                self.tables
                    .contractions
                    .get(&m.to_lowercase())
                    .cloned()
                    .unwrap_or_else(|| m.to_string())
            })
            .into_owned()
    }

    pub fn tokenize(&self, cleaned: &str) -> Vec<String> {
        tokenize(cleaned)
    }

    /// Drops stoplisted tokens, preserving order. Hashtags are never dropped.
    pub fn remove_stopwords(&self, tokens: Vec<String>) -> Vec<String> {
        tokens
            .into_iter()
            .filter(|t| t.starts_with('#') || !self.tables.stopwords.contains(t))
            .collect()
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.tables.stopwords.contains(token)
    }

    pub fn pos_tag(&self, tokens: &[String]) -> Vec<TaggedToken> {
        tokens
            .iter()
            .map(|t| TaggedToken {
                surface: t.clone(),
                tag: self.lexical.tag(t),
                lemma: None,
            })
            .collect()
    }

    pub fn lemmatize(&self, tagged: Vec<TaggedToken>) -> Vec<TaggedToken> {
        tagged
            .into_iter()
            .map(|mut t| {
                t.lemma = Some(self.lexical.lemma(&t.surface, t.tag));
                t
            })
            .collect()
    }

    /// clean -> tokenize -> stopwords -> tag -> lemmatize, returning lemmas.
    pub fn preprocess(&self, text: &str) -> Vec<String> {
        let tokens = self.tokenize(&self.clean(text));
        let tokens = if self.config.remove_stopwords {
            self.remove_stopwords(tokens)
        } else {
            tokens
        };
        self.lemmatize(self.pos_tag(&tokens))
            .into_iter()
            .filter_map(|t| t.lemma)
            .filter(|l| !l.is_empty())
            .collect()
    }
}

/// Splits on whitespace runs; never yields empty tokens.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Replaces every character outside `[A-Za-z0-9_]` with a space, keeping `#`
/// only where it opens a hashtag.
fn strip_punctuation(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in chars.iter().enumerate() {
        let keep = if c.is_ascii_alphanumeric() || c == '_' {
            true
        } else if c == '#' {
            let opens_token = out.is_empty() || out.ends_with(' ');
            let next_is_word = chars
                .get(i + 1)
                .is_some_and(|n| n.is_ascii_alphanumeric() || *n == '_');
            opens_token && next_is_word
        } else {
            false
        };
        out.push(if keep { c } else { ' ' });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pp() -> Preprocessor {
        Preprocessor::default()
    }

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn clean_examples() {
        assert_eq!(
            pp().clean("@jeffmcnamee FDA announces 2 deaths https://t.co/x"),
            "fda announces 2 deaths"
        );
        assert_eq!(pp().clean("Don't trust Pharma!"), "do not trust pharma");
        assert_eq!(pp().clean(""), "");
    }

    #[test]
    fn clean_emoji_hashtags_and_numbers() {
        assert_eq!(
            pp().clean("Vaccine 💉😂 #NoVax!!"),
            "vaccine syringe face_with_tears_of_joy #novax"
        );
        assert_eq!(pp().clean("❤️ it"), "red_heart it");
        assert_eq!(pp().clean("99.7% survival"), "99 7 survival");
        assert_eq!(pp().clean("a#b ##maga # x"), "a b #maga x");
        assert_eq!(pp().clean("That\u{2019}s stupid"), "that is stupid");
        assert_eq!(
            pp().clean("#gonna go, we're gonna"),
            "#gonna go we are going to"
        );
    }

    #[test]
    fn steps_can_be_disabled() {
        let cfg = PipelineConfig {
            remove_urls: false,
            ..PipelineConfig::default()
        };
        let p = Preprocessor::new(cfg).unwrap();
        assert_eq!(p.clean("see https://t.co/x"), "see https t co x");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("no to forced vaccines"),
            toks(&["no", "to", "forced", "vaccines"])
        );
        assert_eq!(tokenize("#maga vaccine"), toks(&["#maga", "vaccine"]));
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn stopword_examples() {
        let p = pp();
        assert_eq!(
            p.remove_stopwords(toks(&["the", "vaccine", "is", "a", "hoax"])),
            toks(&["vaccine", "hoax"])
        );
        assert_eq!(p.remove_stopwords(toks(&["#maga"])), toks(&["#maga"]));
        assert!(p.remove_stopwords(vec![]).is_empty());
    }

    #[test]
    fn tag_and_lemma_examples() {
        let p = pp();
        let tagged = p.pos_tag(&toks(&["running", "vaccine", "qzxv"]));
        let tags: Vec<PosTag> = tagged.iter().map(|t| t.tag).collect();
        assert_eq!(tags, vec![PosTag::Verb, PosTag::Noun, PosTag::Noun]);
        assert!(tagged.iter().all(|t| t.lemma.is_none()));

        let lem = p.lemmatize(vec![
            TaggedToken {
                surface: "vaccines".into(),
                tag: PosTag::Noun,
                lemma: None,
            },
            TaggedToken {
                surface: "better".into(),
                tag: PosTag::Adj,
                lemma: None,
            },
            TaggedToken {
                surface: "vaccine".into(),
                tag: PosTag::Noun,
                lemma: None,
            },
        ]);
        let lemmas: Vec<_> = lem.iter().map(|t| t.lemma.clone().unwrap()).collect();
        assert_eq!(lemmas, toks(&["vaccine", "good", "vaccine"]));
    }

    #[test]
    fn preprocess_examples() {
        let p = pp();
        assert_eq!(
            p.preprocess("The vaccines ARE rushed!"),
            toks(&["vaccine", "rush"])
        );
        assert!(p.preprocess("").is_empty());
        let once = p.preprocess("Vaccines kill");
        assert_eq!(p.preprocess(&once.join(" ")), once);
    }

    proptest! {
        #[test]
        fn clean_alphabet_and_idempotence(s in "\\PC{0,60}") {
            let p = pp();
            let c = p.clean(&s);
            prop_assert!(c.chars().all(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '#' || ch == '_' || ch == ' '));
            prop_assert!(!c.contains("  ") && !c.starts_with(' ') && !c.ends_with(' '));
            prop_assert_eq!(p.clean(&c), c);
        }

        #[test]
        fn tweetlike_clean_idempotence(
            words in proptest::collection::vec(prop_oneof![
                "[A-Za-z']{1,8}", "@[a-z_]{1,6}", "#[A-Za-z]{1,6}", "https://t\\.co/[a-z]{3}",
                Just("😂".to_string()), Just("don't".to_string()), Just("Y'all're".to_string()), "[!?.,%#]{1,3}"
            ], 0..12)
        ) {
            let p = pp();
            let c = p.clean(&words.join(" "));
            prop_assert_eq!(p.clean(&c), c);
        }

        #[test]
        fn stopword_removal_is_a_subsequence(words in proptest::collection::vec("[a-z]{1,5}", 0..20)) {
            let out = pp().remove_stopwords(words.clone());
            let mut it = words.iter();
            for w in &out {
                prop_assert!(it.any(|x| x == w));
            }
        }

        #[test]
        fn preprocess_never_emits_empty_tokens(s in "\\PC{0,60}") {
            prop_assert!(pp().preprocess(&s).iter().all(|t| !t.is_empty()));
        }
    }
}
