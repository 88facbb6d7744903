//! The twelve vaccine-concern labels and compact label sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LabelError;

/// One of the twelve concern categories, in canonical ordinal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ConcernLabel {
    Unnecessary,
    Mandatory,
    Pharma,
    Conspiracy,
    Political,
    Country,
    Rushed,
    Ingredients,
    SideEffect,
    Ineffective,
    Religious,
    None,
}

impl ConcernLabel {
    pub const COUNT: usize = 12;

    pub const ALL: [ConcernLabel; 12] = [
        ConcernLabel::Unnecessary,
        ConcernLabel::Mandatory,
        ConcernLabel::Pharma,
        ConcernLabel::Conspiracy,
        ConcernLabel::Political,
        ConcernLabel::Country,
        ConcernLabel::Rushed,
        ConcernLabel::Ingredients,
        ConcernLabel::SideEffect,
        ConcernLabel::Ineffective,
        ConcernLabel::Religious,
        ConcernLabel::None,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ConcernLabel::Unnecessary => "unnecessary",
            ConcernLabel::Mandatory => "mandatory",
            ConcernLabel::Pharma => "pharma",
            ConcernLabel::Conspiracy => "conspiracy",
            ConcernLabel::Political => "political",
            ConcernLabel::Country => "country",
            ConcernLabel::Rushed => "rushed",
            ConcernLabel::Ingredients => "ingredients",
            ConcernLabel::SideEffect => "side-effect",
            ConcernLabel::Ineffective => "ineffective",
            ConcernLabel::Religious => "religious",
            ConcernLabel::None => "none",
        }
    }

    /// Case-insensitive parse; `side effect` and `side_effect` map to `side-effect`.
    pub fn parse(token: &str) -> Result<Self, LabelError> {
        let norm = token.trim().to_lowercase();
        let norm = match norm.as_str() {
            "side effect" | "side_effect" => "side-effect".to_string(),
            _ => norm,
        };
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == norm)
            .ok_or_else(|| LabelError::Unknown(token.to_string()))
    }
}

impl fmt::Display for ConcernLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConcernLabel {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl From<ConcernLabel> for String {
    fn from(l: ConcernLabel) -> Self {
        l.name().to_string()
    }
}

impl TryFrom<String> for ConcernLabel {
    type Error = LabelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(&s)
    }
}

/// A subset of the twelve labels, stored as a 12-bit mask keyed by ordinal.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(into = "String", try_from = "String")]
pub struct LabelSet(u16);

impl LabelSet {
    const MASK: u16 = (1 << ConcernLabel::COUNT) - 1;

    pub const fn empty() -> Self {
        LabelSet(0)
    }

    pub fn from_bits(bits: u16) -> Option<Self> {
        (bits & !Self::MASK == 0).then_some(LabelSet(bits))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn single(label: ConcernLabel) -> Self {
        LabelSet(1 << label.ordinal())
    }

    pub fn insert(&mut self, label: ConcernLabel) {
        self.0 |= 1 << label.ordinal();
    }

    pub fn remove(&mut self, label: ConcernLabel) {
        self.0 &= !(1 << label.ordinal());
    }

    pub fn contains(self, label: ConcernLabel) -> bool {
        self.0 & (1 << label.ordinal()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        LabelSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        LabelSet(self.0 & other.0)
    }

    /// Labels in ordinal order.
    pub fn iter(self) -> impl Iterator<Item = ConcernLabel> {
        ConcernLabel::ALL
            .into_iter()
            .filter(move |l| self.contains(*l))
    }

    /// True when `none` appears alongside some other label.
    pub fn has_conflicting_none(self) -> bool {
        self.contains(ConcernLabel::None) && self.len() > 1
    }

    /// Drops `none` when any other label is present.
    pub fn normalized(mut self) -> Self {
        if self.has_conflicting_none() {
            self.remove(ConcernLabel::None);
        }
        self
    }

    /// Parses the space-separated encoding used in CSV label columns.
    pub fn parse_encoded(s: &str) -> Result<Self, LabelError> {
        s.split_whitespace()
            .map(ConcernLabel::parse)
            .collect::<Result<Self, _>>()
    }
}

impl FromIterator<ConcernLabel> for LabelSet {
    fn from_iter<I: IntoIterator<Item = ConcernLabel>>(iter: I) -> Self {
        let mut set = LabelSet::empty();
        for l in iter {
            set.insert(l);
        }
        set
    }
}

/// Space-separated canonical names in ordinal order.
impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(l.name())?;
        }
        Ok(())
    }
}

impl From<LabelSet> for String {
    fn from(s: LabelSet) -> Self {
        s.to_string()
    }
}

impl TryFrom<String> for LabelSet {
    type Error = LabelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        LabelSet::parse_encoded(&s)
    }
}
