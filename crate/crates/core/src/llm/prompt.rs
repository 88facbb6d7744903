//! Prompt assets, exemplar selection and prompt rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assets::{self, parse_table};
use crate::corpus::Dataset;
use crate::error::LlmError;
use crate::labels::{ConcernLabel, LabelSet};
use crate::rng::SeededRng;

use super::response::render_label_list;

pub const DELIMITER: &str = "```";
const SEPARATOR: &str = "###";

/// Everything in the prompt that is not the tweet or the exemplars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptAssets {
    descriptions: Vec<String>,
    keywords: Vec<Vec<String>>,
    task: String,
    format: Vec<String>,
    note: String,
}

impl PromptAssets {
    pub fn builtin() -> Self {
        Self::from_tables(
            assets::CONCERN_DESCRIPTIONS,
            assets::CONCERN_KEYWORDS,
            assets::PROMPT_TEMPLATE,
        )
        .expect("bundled prompt assets are complete")
    }

    /// Builds assets from the three `key<TAB>value` tables.
    pub fn from_tables(
        descriptions: &str,
        keywords: &str,
        template: &str,
    ) -> Result<Self, LlmError> {
        let bad = |m: String| LlmError::Assets(m);
        let per_label = |name: &str, text: &str| -> Result<Vec<String>, LlmError> {
            let mut out: Vec<Option<String>> = vec![Option::None; ConcernLabel::COUNT];
            for (k, v) in parse_table(name, text).map_err(|e| bad(e.to_string()))? {
                let label = ConcernLabel::parse(&k).map_err(|e| bad(format!("{name}: {e}")))?;
                out[label.ordinal()] = Some(v.trim().to_string());
            }
            out.into_iter()
                .zip(ConcernLabel::ALL)
                .map(|(v, l)| v.ok_or_else(|| bad(format!("{name}: no entry for `{l}`"))))
                .collect()
        };
        let descriptions = per_label("descriptions", descriptions)?;
        if let Some(i) = descriptions.iter().position(|d| d.is_empty()) {
            return Err(bad(format!(
                "descriptions: `{}` is empty",
                ConcernLabel::ALL[i]
            )));
        }
        let keywords = per_label("keywords", keywords)?
            .into_iter()
            .map(|line| {
                line.split(',')
                    .map(str::trim)
                    .filter(|k| !k.is_empty())
                    .map(str::to_string)
                    .collect()
            })
            .collect();

        let (mut task, mut note, mut format) = (Option::None, Option::None, Vec::new());
        for (k, v) in parse_table("template", template).map_err(|e| bad(e.to_string()))? {
            match k.as_str() {
                "task" => task = Some(v),
                "note" => note = Some(v),
                "format" => format.push(v),
                other => return Err(bad(format!("template: unknown section `{other}`"))),
            }
        }
        let task = task.ok_or_else(|| bad("template: missing `task`".into()))?;
        let note = note.ok_or_else(|| bad("template: missing `note`".into()))?;
        if format.is_empty() {
            return Err(bad("template: missing `format`".into()));
        }
        Ok(PromptAssets {
            descriptions,
            keywords,
            task,
            format,
            note,
        })
    }

    pub fn description(&self, label: ConcernLabel) -> &str {
        &self.descriptions[label.ordinal()]
    }

    pub fn keywords(&self, label: ConcernLabel) -> &[String] {
        &self.keywords[label.ordinal()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub text: String,
    pub labels: LabelSet,
}

/// Few-shot examples covering every concern label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarSet {
    items: Vec<Exemplar>,
}

impl ExemplarSet {
    pub fn new(items: Vec<Exemplar>) -> Result<Self, LlmError> {
        let covered = items
            .iter()
            .fold(LabelSet::empty(), |acc, e| acc.union(e.labels));
        if let Some(l) = ConcernLabel::ALL
            .into_iter()
            .find(|l| !covered.contains(*l))
        {
            return Err(LlmError::LabelAbsent(l.to_string()));
        }
        Ok(ExemplarSet { items })
    }

    pub fn items(&self) -> &[Exemplar] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Picks `n` labelled records so that every label is covered.
///
/// Labels are visited from rarest to most frequent (ties by ordinal); each
/// label not yet covered gets one random record carrying it. The rest is
/// filled uniformly at random without replacement.
pub fn select_exemplars(train: &Dataset, n: usize, seed: u64) -> Result<ExemplarSet, LlmError> {
    if n < ConcernLabel::COUNT {
        return Err(LlmError::TooFewExemplars(n));
    }
    if n > train.len() {
        return Err(LlmError::NotEnoughRecords {
            requested: n,
            available: train.len(),
        });
    }
    let gold: Vec<LabelSet> = train
        .records
        .iter()
        .map(|r| {
            r.gold
                .map(LabelSet::normalized)
                .ok_or_else(|| LlmError::Unlabeled(r.id.clone()))
        })
        .collect::<Result<_, _>>()?;

    let mut counts = [0usize; ConcernLabel::COUNT];
    for g in &gold {
        for l in g.iter() {
            counts[l.ordinal()] += 1;
        }
    }
    if let Some(l) = ConcernLabel::ALL
        .into_iter()
        .find(|l| counts[l.ordinal()] == 0)
    {
        return Err(LlmError::LabelAbsent(l.to_string()));
    }
    let mut by_rarity = ConcernLabel::ALL;
    by_rarity.sort_by_key(|l| (counts[l.ordinal()], l.ordinal()));

    let mut rng = SeededRng::new(seed);
    let mut taken = vec![false; gold.len()];
    let mut picked = Vec::with_capacity(n);
    let mut covered = LabelSet::empty();
    for label in by_rarity {
        if covered.contains(label) {
            continue;
        }
        let pool: Vec<usize> = (0..gold.len())
            .filter(|&i| !taken[i] && gold[i].contains(label))
            .collect();
        let i = pool[rng.below(pool.len())];
        taken[i] = true;
        covered = covered.union(gold[i]);
        picked.push(i);
    }
    let mut rest: Vec<usize> = (0..gold.len()).filter(|&i| !taken[i]).collect();
    rng.shuffle(&mut rest);
    picked.extend(rest.into_iter().take(n - picked.len()));

    ExemplarSet::new(
        picked
            .into_iter()
            .map(|i| Exemplar {
                id: train.records[i].id.clone(),
                text: train.records[i].text.clone(),
                labels: gold[i],
            })
            .collect(),
    )
}

/// Removes backticks and line breaks so the text cannot break the layout.
/// The flag is set when backticks were removed.
pub fn sanitize(text: &str) -> (String, bool) {
    let had_ticks = text.contains('`');
    let s: String = text
        .chars()
        .filter(|&c| c != '`')
        .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
        .collect();
    (s, had_ticks)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub warnings: Vec<String>,
}

pub fn build_prompt(tweet: &str, assets: &PromptAssets, exemplars: &ExemplarSet) -> Prompt {
    let mut warnings = Vec::new();
    let mut s = String::new();
    let _ = writeln!(s, "{}", assets.task);
    let _ = writeln!(s);
    let _ = writeln!(s, "Concern List:");
    for (i, l) in ConcernLabel::ALL.iter().enumerate() {
        let _ = writeln!(s, "{}. {}", i + 1, l);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{SEPARATOR}");
    let _ = writeln!(
        s,
        "Description of the {} different vaccine concerns :",
        ConcernLabel::COUNT
    );
    for (i, l) in ConcernLabel::ALL.iter().enumerate() {
        let _ = writeln!(s, "{}. {}: {}", i + 1, l, assets.description(*l));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{SEPARATOR}");
    let _ = writeln!(
        s,
        "Some of the keywords associated with tweets for each label:"
    );
    for (i, l) in ConcernLabel::ALL.iter().enumerate() {
        let kw = assets.keywords(*l);
        let kw = if kw.is_empty() {
            "(none)".to_string()
        } else {
            kw.join(", ")
        };
        let _ = writeln!(s, "{}. {}: Keywords - {}", i + 1, l, kw);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{SEPARATOR}");
    let _ = writeln!(s, "Examples:");
    for e in exemplars.items() {
        let (text, ticks) = sanitize(&e.text);
        if ticks {
            warnings.push(format!("backticks removed from exemplar `{}`", e.id));
        }
        let _ = writeln!(s, "Tweet: \"{text}\"");
        let _ = writeln!(s, "Concern: {}", render_label_list(e.labels));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{SEPARATOR}");
    for line in &assets.format {
        let _ = writeln!(s, "{line}");
    }
    let _ = writeln!(s);
    let (tweet, ticks) = sanitize(tweet);
    if ticks {
        log::warn!("backticks removed from tweet text");
        warnings.push("backticks removed from tweet".to_string());
    }
    let _ = writeln!(s, "Tweet: {DELIMITER}{tweet}{DELIMITER}");
    let _ = writeln!(s);
    let _ = writeln!(s, "{}", assets.note);
    Prompt { text: s, warnings }
}

/// The tweet between the delimiters of a rendered prompt.
pub fn extract_tweet(prompt: &str) -> Option<&str> {
    let start = prompt.find(DELIMITER)? + DELIMITER.len();
    let len = prompt[start..].find(DELIMITER)?;
    Some(&prompt[start..start + len])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DatasetFormat, TweetRecord};
    use ConcernLabel::*;

    fn record(id: usize, labels: &[ConcernLabel]) -> TweetRecord {
        TweetRecord {
            id: format!("t{id}"),
            text: format!("tweet number {id}"),
            gold: Some(labels.iter().copied().collect()),
        }
    }

    fn one_per_label() -> Dataset {
        let records = ConcernLabel::ALL
            .iter()
            .enumerate()
            .map(|(i, l)| record(i, &[*l]))
            .collect();
        Dataset::new(records, DatasetFormat::Labeled)
    }

    fn covering_set() -> ExemplarSet {
        select_exemplars(&one_per_label(), 12, 0).unwrap()
    }

    #[test]
    fn builtin_assets_are_complete() {
        let a = PromptAssets::builtin();
        for l in ConcernLabel::ALL {
            assert!(!a.description(l).is_empty());
        }
        assert!(a.keywords(None).is_empty());
        assert!(!a.keywords(Pharma).is_empty());
    }

    #[test]
    fn missing_description_is_an_error() {
        let desc = "unnecessary\tx\n";
        assert!(
            PromptAssets::from_tables(desc, assets::CONCERN_KEYWORDS, assets::PROMPT_TEMPLATE)
                .is_err()
        );
    }

    #[test]
    fn forced_selection_takes_every_record() {
        let set = covering_set();
        let mut ids: Vec<&str> = set.items().iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        let mut want: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
        want.sort_unstable();
        assert_eq!(ids, want);
    }

    #[test]
    fn selection_errors() {
        assert!(matches!(
            select_exemplars(&one_per_label(), 11, 0),
            Err(LlmError::TooFewExemplars(11))
        ));
        assert!(matches!(
            select_exemplars(&one_per_label(), 13, 0),
            Err(LlmError::NotEnoughRecords { .. })
        ));
        let mut ds = one_per_label();
        ds.records.retain(|r| r.id != "t5");
        ds.records.push(record(99, &[Pharma]));
        assert!(
            matches!(select_exemplars(&ds, 12, 0), Err(LlmError::LabelAbsent(l)) if l == "country")
        );
    }

    #[test]
    fn selection_covers_labels_and_is_seeded() {
        let mut records: Vec<TweetRecord> = (0..200)
            .map(|i| record(i, &[ConcernLabel::ALL[i % 5], ConcernLabel::ALL[5 + i % 3]]))
            .collect();
        for (k, l) in [SideEffect, Ineffective, Religious, None]
            .into_iter()
            .enumerate()
        {
            records.push(record(300 + k, &[l]));
        }
        let ds = Dataset::new(records, DatasetFormat::Labeled);
        let a = select_exemplars(&ds, 58, 7).unwrap();
        assert_eq!(a.len(), 58);
        let covered = a
            .items()
            .iter()
            .fold(LabelSet::empty(), |s, e| s.union(e.labels));
        assert_eq!(covered.len(), 12);
        assert_eq!(a, select_exemplars(&ds, 58, 7).unwrap());
        assert_ne!(a, select_exemplars(&ds, 58, 8).unwrap());
        let mut ids: Vec<&str> = a.items().iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 58);
    }

    #[test]
    fn prompt_structure() {
        let p = build_prompt(
            "big pharma wants money",
            &PromptAssets::builtin(),
            &covering_set(),
        );
        let t = &p.text;
        assert!(p.warnings.is_empty());
        assert_eq!(t.matches(DELIMITER).count(), 2);
        for l in ConcernLabel::ALL {
            assert!(t.contains(l.name()));
        }
        let order = [
            "Task:",
            "Concern List:",
            "###\nDescription",
            "###\nSome of the keywords",
            "###\nExamples:",
            "###\nFormat of response",
            "Tweet: ```",
            "Note:",
        ];
        let pos: Vec<usize> = order.iter().map(|k| t.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{pos:?}");
        assert_eq!(t.matches("\n###\n").count(), 4);
        assert!(t.contains("12. none: Keywords - (none)\n"));
        assert!(t.contains("Tweet: \"tweet number 2\"\nConcern: ['pharma']\n"));
        assert_eq!(extract_tweet(t), Some("big pharma wants money"));
    }

    #[test]
    fn prompt_is_deterministic_and_strips_backticks() {
        let assets = PromptAssets::builtin();
        let set = covering_set();
        assert_eq!(
            build_prompt("x", &assets, &set),
            build_prompt("x", &assets, &set)
        );
        let p = build_prompt("evil ```code``` here", &assets, &set);
        assert_eq!(p.text.matches(DELIMITER).count(), 2);
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(extract_tweet(&p.text), Some("evil code here"));
    }
}
