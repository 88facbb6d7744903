//! Lexicon-driven part-of-speech tagging and rule-based lemmatization.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::assets::{self, parse_table};
use crate::error::AssetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl PosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "NOUN" => PosTag::Noun,
            "VERB" => PosTag::Verb,
            "ADJ" => PosTag::Adj,
            "ADV" => PosTag::Adv,
            "OTHER" => PosTag::Other,
            _ => return None,
        })
    }

    fn slot(self) -> Option<usize> {
        match self {
            PosTag::Noun => Some(0),
            PosTag::Verb => Some(1),
            PosTag::Adj => Some(2),
            PosTag::Adv => Some(3),
            PosTag::Other => None,
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    pub tag: PosTag,
    pub lemma: Option<String>,
}

/// Tagger lexicon, suffix fallbacks, lemma exceptions and detachment rules.
#[derive(Debug)]
pub struct LexicalTables {
    /// word -> tags for which it is a base form; the first is the tagger's choice
    lexicon: HashMap<String, Vec<PosTag>>,
    /// (suffix, tag), longest suffix first
    suffix_rules: Vec<(String, PosTag)>,
    /// per tag slot: inflection -> lemma
    exceptions: [HashMap<String, String>; 4],
    /// per tag slot: (suffix, replacement), longest suffix first
    detach: [Vec<(String, String)>; 4],
    base: [HashSet<String>; 4],
}

const EXCEPTION_LOOKUP_ORDER: [PosTag; 4] = [PosTag::Verb, PosTag::Adj, PosTag::Noun, PosTag::Adv];

impl LexicalTables {
    pub fn builtin() -> Arc<LexicalTables> {
        static TABLES: OnceLock<Arc<LexicalTables>> = OnceLock::new();
        TABLES
            .get_or_init(|| Arc::new(Self::from_texts().expect("bundled lexical tables are valid")))
            .clone()
    }

    fn from_texts() -> Result<Self, AssetError> {
        let bad = |name: &str, message: String| AssetError::Format {
            name: name.to_string(),
            line: 0,
            message,
        };
        let mut lexicon = HashMap::new();
        let mut base: [HashSet<String>; 4] = Default::default();
        for (word, tags) in parse_table("pos_lexicon", assets::POS_LEXICON)? {
            let tags = tags
                .split(',')
                .map(|t| {
                    PosTag::parse(t).ok_or_else(|| bad("pos_lexicon", format!("bad tag `{t}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            for t in &tags {
                if let Some(slot) = t.slot() {
                    base[slot].insert(word.clone());
                }
            }
            lexicon.insert(word, tags);
        }

        let mut suffix_rules = parse_table("pos_suffix_rules", assets::POS_SUFFIX_RULES)?
            .into_iter()
            .map(|(suffix, tag)| {
                PosTag::parse(&tag)
                    .map(|t| (suffix, t))
                    .ok_or_else(|| bad("pos_suffix_rules", format!("bad tag `{tag}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        suffix_rules.sort_by_key(|(s, _)| std::cmp::Reverse(s.len()));

        let mut exceptions: [HashMap<String, String>; 4] = Default::default();
        for (slot, text) in [
            assets::EXC_NOUN,
            assets::EXC_VERB,
            assets::EXC_ADJ,
            assets::EXC_ADV,
        ]
        .into_iter()
        .enumerate()
        {
            exceptions[slot] = parse_table("lemma_exceptions", text)?.into_iter().collect();
        }

        let mut detach: [Vec<(String, String)>; 4] = Default::default();
        for (tag, rule) in parse_table("lemma_rules", assets::LEMMA_RULES)? {
            let slot = PosTag::parse(&tag)
                .and_then(PosTag::slot)
                .ok_or_else(|| bad("lemma_rules", format!("bad tag `{tag}`")))?;
            let (suffix, replacement) = rule
                .split_once('>')
                .ok_or_else(|| bad("lemma_rules", format!("bad rule `{rule}`")))?;
            detach[slot].push((suffix.to_string(), replacement.to_string()));
        }
        for rules in &mut detach {
            // stable: equal-length suffixes keep file order
            rules.sort_by_key(|(s, _)| std::cmp::Reverse(s.len()));
        }

        Ok(LexicalTables {
            lexicon,
            suffix_rules,
            exceptions,
            detach,
            base,
        })
    }

    pub fn lexicon_len(&self) -> usize {
        self.lexicon.len()
    }

    /// Tag for one lowercase token.
    ///
    /// Tokens with anything other than `a-z` (numbers, hashtags, emoji names)
    /// are `OTHER`. Otherwise: lexicon, then irregular-inflection lists, then
    /// suffix rules, then `NOUN`.
    pub fn tag(&self, token: &str) -> PosTag {
        if token.is_empty() || !token.bytes().all(|b| b.is_ascii_lowercase()) {
            return PosTag::Other;
        }
        if let Some(tags) = self.lexicon.get(token) {
            return tags[0];
        }
        for tag in EXCEPTION_LOOKUP_ORDER {
            if self.exceptions[tag.slot().unwrap()].contains_key(token) {
                return tag;
            }
        }
        self.suffix_rules
            .iter()
            .find(|(suffix, _)| token.len() > suffix.len() && token.ends_with(suffix.as_str()))
            .map(|(_, tag)| *tag)
            .unwrap_or(PosTag::Noun)
    }

    /// Base form of `surface` read as `tag`.
    ///
    /// Exception list first; a known base form maps to itself; otherwise the
    /// longest detachment rule whose result is a known base form (and not an
    /// irregular inflection) wins. Falls back to the surface form.
    pub fn lemma(&self, surface: &str, tag: PosTag) -> String {
        let Some(slot) = tag.slot() else {
            return surface.to_string();
        };
        if let Some(l) = self.exceptions[slot].get(surface) {
            return l.clone();
        }
        if self.base[slot].contains(surface) {
            return surface.to_string();
        }
        for (suffix, replacement) in &self.detach[slot] {
            if let Some(stem) = surface.strip_suffix(suffix.as_str()) {
                if stem.is_empty() {
                    continue;
                }
                let candidate = format!("{stem}{replacement}");
                if self.base[slot].contains(&candidate)
                    && !self.exceptions[slot].contains_key(&candidate)
                {
                    return candidate;
                }
            }
        }
        surface.to_string()
    }
}
