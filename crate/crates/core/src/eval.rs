//! Multi-label scoring: per-class precision, recall and F1, their macro
//! averages, and the Jaccard index between gold and predicted label sets.

use std::fmt::{self, Write as _};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::labels::{ConcernLabel, LabelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JaccardMode {
    /// Mean of per-sample `|gold ∩ pred| / |gold ∪ pred|`.
    Samples,
    /// Mean over labels of `TP / (TP + FP + FN)`.
    Macro,
}

impl fmt::Display for JaccardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JaccardMode::Samples => "samples",
            JaccardMode::Macro => "macro",
        })
    }
}

impl std::str::FromStr for JaccardMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "samples" => Ok(JaccardMode::Samples),
            "macro" => Ok(JaccardMode::Macro),
            other => Err(format!("unknown jaccard mode `{other}`")),
        }
    }
}

/// How undefined ratios resolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalPolicy {
    /// Value of P, R or F1 when the denominator is zero.
    pub zero_division: f64,
    /// Jaccard of two empty sets.
    pub jaccard_empty: f64,
    pub jaccard_mode: JaccardMode,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        EvalPolicy {
            zero_division: 0.0,
            jaccard_empty: 1.0,
            jaccard_mode: JaccardMode::Samples,
        }
    }
}

impl EvalPolicy {
    pub fn tag(&self) -> String {
        format!(
            "zero_division={};jaccard_empty={};jaccard_mode={}",
            self.zero_division, self.jaccard_empty, self.jaccard_mode
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClasswiseCounts {
    per_label: [Counts; ConcernLabel::COUNT],
}

impl ClasswiseCounts {
    pub fn get(&self, label: ConcernLabel) -> Counts {
        self.per_label[label.ordinal()]
    }
}

fn check_lengths(gold: &[LabelSet], pred: &[LabelSet]) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    Ok(())
}

pub fn count_classwise(gold: &[LabelSet], pred: &[LabelSet]) -> Result<ClasswiseCounts, EvalError> {
    check_lengths(gold, pred)?;
    let mut out = ClasswiseCounts::default();
    for (g, p) in gold.iter().zip(pred) {
        for label in ConcernLabel::ALL {
            let c = &mut out.per_label[label.ordinal()];
            match (g.contains(label), p.contains(label)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(out)
}

fn ratio(num: usize, den: usize, zero_division: f64) -> f64 {
    if den == 0 {
        zero_division
    } else {
        num as f64 / den as f64
    }
}

/// `P = TP/(TP+FP)`, `R = TP/(TP+FN)`, `F1 = TP / (TP + (FP+FN)/2)`.
pub fn precision_recall_f1(c: Counts, zero_division: f64) -> (f64, f64, f64) {
    let p = ratio(c.tp, c.tp + c.fp, zero_division);
    let r = ratio(c.tp, c.tp + c.fn_, zero_division);
    (p, r, f1_from_counts(c, zero_division))
}

pub fn f1_from_counts(c: Counts, zero_division: f64) -> f64 {
    let den = c.tp as f64 + 0.5 * (c.fp + c.fn_) as f64;
    if den == 0.0 {
        zero_division
    } else {
        c.tp as f64 / den
    }
}

/// `2PR / (P + R)`, zero when both are zero.
pub fn harmonic_f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Unweighted mean; zero for an empty slice.
pub fn macro_average(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn jaccard_sample(gold: LabelSet, pred: LabelSet, empty_value: f64) -> f64 {
    let union = gold.union(pred).len();
    if union == 0 {
        empty_value
    } else {
        gold.intersection(pred).len() as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: ConcernLabel,
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub jaccard: f64,
    pub samples: usize,
    pub policy: EvalPolicy,
}

pub fn evaluate(
    gold: &[LabelSet],
    pred: &[LabelSet],
    policy: &EvalPolicy,
) -> Result<MetricsReport, EvalError> {
    evaluate_over(gold, pred, &ConcernLabel::ALL, policy)
}

/// Scores restricted to `universe`: labels outside it are ignored in both
/// the per-class table and the Jaccard sets.
pub fn evaluate_over(
    gold: &[LabelSet],
    pred: &[LabelSet],
    universe: &[ConcernLabel],
    policy: &EvalPolicy,
) -> Result<MetricsReport, EvalError> {
    if universe.is_empty() {
        return Err(EvalError::EmptyUniverse);
    }
    let counts = count_classwise(gold, pred)?;
    let classes: Vec<ClassMetrics> = universe
        .iter()
        .map(|&label| {
            let c = counts.get(label);
            let (precision, recall, f1) = precision_recall_f1(c, policy.zero_division);
            ClassMetrics {
                label,
                counts: c,
                precision,
                recall,
                f1,
            }
        })
        .collect();
    let column =
        |f: fn(&ClassMetrics) -> f64| macro_average(&classes.iter().map(f).collect::<Vec<_>>());

    let mask: LabelSet = universe.iter().copied().collect();
    let jaccard = match policy.jaccard_mode {
        JaccardMode::Samples => {
            let per: Vec<f64> = gold
                .iter()
                .zip(pred)
                .map(|(g, p)| {
                    jaccard_sample(
                        g.intersection(mask),
                        p.intersection(mask),
                        policy.jaccard_empty,
                    )
                })
                .collect();
            macro_average(&per)
        }
        JaccardMode::Macro => {
            let per: Vec<f64> = classes
                .iter()
                .map(|m| {
                    ratio(
                        m.counts.tp,
                        m.counts.tp + m.counts.fp + m.counts.fn_,
                        policy.zero_division,
                    )
                })
                .collect();
            macro_average(&per)
        }
    };

    Ok(MetricsReport {
        macro_precision: column(|m| m.precision),
        macro_recall: column(|m| m.recall),
        macro_f1: column(|m| m.f1),
        classes,
        jaccard,
        samples: gold.len(),
        policy: *policy,
    })
}

impl MetricsReport {
    /// `class,P,R,F1` rows, then `macro`, `jaccard_<mode>` and `policy` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "class,P,R,F1")?;
        for m in &self.classes {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6}",
                m.label, m.precision, m.recall, m.f1
            )?;
        }
        writeln!(
            out,
            "macro,{:.6},{:.6},{:.6}",
            self.macro_precision, self.macro_recall, self.macro_f1
        )?;
        writeln!(
            out,
            "jaccard_{},{:.6},,",
            self.policy.jaccard_mode, self.jaccard
        )?;
        writeln!(out, "policy,{},,", self.policy.tag())?;
        Ok(())
    }

    /// Classes sorted by F1 ascending, then by support ascending.
    pub fn hardest(&self, n: usize) -> Vec<&ClassMetrics> {
        let mut v: Vec<&ClassMetrics> = self.classes.iter().collect();
        v.sort_by(|a, b| {
            a.f1.total_cmp(&b.f1)
                .then(a.counts.support().cmp(&b.counts.support()))
                .then(a.label.cmp(&b.label))
        });
        v.truncate(n);
        v
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:>7} {:>7} {:>7} {:>8}",
            "class", "P", "R", "F1", "support"
        );
        for m in &self.classes {
            let _ = writeln!(
                s,
                "{:<12} {:>7.4} {:>7.4} {:>7.4} {:>8}",
                m.label.name(),
                m.precision,
                m.recall,
                m.f1,
                m.counts.support()
            );
        }
        let _ = writeln!(
            s,
            "{:<12} {:>7.4} {:>7.4} {:>7.4} {:>8}",
            "macro", self.macro_precision, self.macro_recall, self.macro_f1, self.samples
        );
        let _ = writeln!(
            s,
            "jaccard ({}): {:.4}",
            self.policy.jaccard_mode, self.jaccard
        );
        let hard: Vec<&str> = self.hardest(3).iter().map(|m| m.label.name()).collect();
        let _ = writeln!(s, "hardest classes: {}", hard.join(", "));
        let _ = writeln!(s, "policy: {}", self.policy.tag());
        s
    }
}
