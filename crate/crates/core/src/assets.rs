//! Bundled data tables and the `key<TAB>value` format they share.
//!
//! Lines starting with `#` and blank lines are ignored. The value may be
//! empty but the tab separator is required.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::AssetError;

pub const STOPWORDS_EN: &str = include_str!("../assets/stopwords_en.tsv");
pub const CONTRACTIONS_EN: &str = include_str!("../assets/contractions_en.tsv");
pub const EMOJI_NAMES: &str = include_str!("../assets/emoji_names.tsv");
pub const POS_LEXICON: &str = include_str!("../assets/pos_lexicon.tsv");
pub const POS_SUFFIX_RULES: &str = include_str!("../assets/pos_suffix_rules.tsv");
pub const LEMMA_RULES: &str = include_str!("../assets/lemma_rules.tsv");
pub const EXC_NOUN: &str = include_str!("../assets/exc_noun.tsv");
pub const EXC_VERB: &str = include_str!("../assets/exc_verb.tsv");
pub const EXC_ADJ: &str = include_str!("../assets/exc_adj.tsv");
pub const EXC_ADV: &str = include_str!("../assets/exc_adv.tsv");
pub const CONCERN_DESCRIPTIONS: &str = include_str!("../assets/concern_descriptions.tsv");
pub const CONCERN_KEYWORDS: &str = include_str!("../assets/concern_keywords.tsv");
pub const PROMPT_TEMPLATE: &str = include_str!("../assets/prompt_template.tsv");

/// Where a swappable table comes from: the bundled copy or a file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum AssetSource {
    #[default]
    Builtin,
    File(PathBuf),
}

impl AssetSource {
    /// Returns the table text, reading the file when not builtin.
    pub fn load(
        &self,
        builtin: &'static str,
    ) -> Result<std::borrow::Cow<'static, str>, AssetError> {
        match self {
            AssetSource::Builtin => Ok(builtin.into()),
            AssetSource::File(path) => {
                std::fs::read_to_string(path)
                    .map(Into::into)
                    .map_err(|source| AssetError::Read {
                        path: path.clone(),
                        source,
                    })
            }
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for AssetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssetSource::Builtin => f.write_str("builtin"),
            AssetSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl From<String> for AssetSource {
    fn from(s: String) -> Self {
        if s.is_empty() || s == "builtin" {
            AssetSource::Builtin
        } else {
            AssetSource::File(PathBuf::from(s))
        }
    }
}

impl From<AssetSource> for String {
    fn from(s: AssetSource) -> Self {
        s.to_string()
    }
}

impl From<&Path> for AssetSource {
    fn from(p: &Path) -> Self {
        AssetSource::File(p.to_path_buf())
    }
}

/// Parses a `key<TAB>value` table into ordered pairs.
pub fn parse_table(name: &str, text: &str) -> Result<Vec<(String, String)>, AssetError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('\t').ok_or_else(|| AssetError::Format {
            name: name.to_string(),
            line: i + 1,
            message: "missing tab separator".into(),
        })?;
        if key.is_empty() {
            return Err(AssetError::Format {
                name: name.to_string(),
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}
