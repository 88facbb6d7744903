//! The `Concern:` / `Reasoning:` completion format.

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::labels::{ConcernLabel, LabelSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedLlmOutput {
    pub labels: LabelSet,
    pub reasoning: String,
    pub warnings: Vec<String>,
    /// The completion stops mid-sentence, usually at the token limit.
    pub truncated: bool,
}

/// `['a', 'b']` in ordinal order.
pub fn render_label_list(labels: LabelSet) -> String {
    let names: Vec<String> = labels.iter().map(|l| format!("'{l}'")).collect();
    format!("[{}]", names.join(", "))
}

pub fn render_response(labels: LabelSet, reasoning: &str) -> String {
    let mut s = format!("Concern: {}", render_label_list(labels));
    if !reasoning.is_empty() {
        s.push_str("\nReasoning: ");
        s.push_str(reasoning);
    }
    s
}

fn normalize_token(token: &str) -> String {
    let t = token
        .trim()
        .trim_matches(|c: char| c == '\'' || c == '"' || c == '`' || c.is_whitespace())
        .to_lowercase();
    t.split_whitespace()
        .collect::<Vec<_>>()
        .join("-")
        .replace('_', "-")
}

fn looks_truncated(text: &str) -> bool {
    let t = text.trim_end();
    !t.is_empty() && !t.ends_with(['.', '!', '?', '"', '\'', ')', ']'])
}

pub fn parse_response(raw: &str) -> Result<ParsedLlmOutput, ParseError> {
    let mut lines = raw.lines();
    let concern = lines
        .by_ref()
        .find_map(|l| l.trim_start().strip_prefix("Concern:"))
        .ok_or(ParseError::NoConcernLine)?;

    let body = match concern.find('[') {
        Some(open) => {
            let rest = &concern[open + 1..];
            rest.find(']').map_or(rest, |close| &rest[..close])
        }
        Option::None => concern,
    };
    let mut labels = LabelSet::empty();
    let mut warnings = Vec::new();
    for token in body.split(',') {
        let norm = normalize_token(token);
        if norm.is_empty() {
            continue;
        }
        match ConcernLabel::parse(&norm) {
            Ok(l) => labels.insert(l),
            Err(_) => warnings.push(format!("unknown label `{}` dropped", token.trim())),
        }
    }
    let labels = labels.normalized();
    if labels.is_empty() {
        return Err(ParseError::EmptyLabels(concern.trim().to_string()));
    }

    let after: Vec<&str> = lines.collect();
    let after = after.join("\n");
    let reasoning = after
        .find("Reasoning:")
        .map(|i| after[i + "Reasoning:".len()..].trim().to_string())
        .unwrap_or_default();
    let truncated = if reasoning.is_empty() {
        false
    } else {
        looks_truncated(&reasoning)
    };
    if truncated {
        warnings.push("reasoning truncated".to_string());
    }
    Ok(ParsedLlmOutput {
        labels,
        reasoning,
        warnings,
        truncated,
    })
}
