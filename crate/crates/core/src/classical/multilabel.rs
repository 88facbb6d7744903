//! Binary relevance and classifier chains over the twelve concern labels.
//!
//! Labels seen fewer than two times get a constant-negative stub; a label
//! present on every training row gets a constant-positive stub. When no
//! label clears the threshold, the label with the highest score among the
//! trained classifiers is predicted, so predictions are never empty.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_base, BaseModel, BinaryClassifier, LearnerKind, TrainConfig};
use crate::error::LearnError;
use crate::features::SparseVector;
use crate::labels::{ConcernLabel, LabelSet};
use crate::rng::SeededRng;

pub trait MultiLabelModel {
    fn dim(&self) -> usize;

    /// Per-label scores indexed by ordinal.
    fn scores(&self, x: &SparseVector) -> Result<[f64; ConcernLabel::COUNT], LearnError>;

    fn predict(&self, x: &SparseVector) -> Result<LabelSet, LearnError>;
}

pub fn predict_batch<M: MultiLabelModel + Sync>(
    model: &M,
    x: &[SparseVector],
) -> Result<Vec<LabelSet>, LearnError> {
    if let Some(row) = x.iter().find(|r| r.dim() != model.dim()) {
        return Err(LearnError::DimensionMismatch {
            expected: model.dim(),
            found: row.dim(),
        });
    }
    x.par_iter().map(|row| model.predict(row)).collect()
}

fn check_input(x: &[SparseVector], y: &[LabelSet], cfg: &TrainConfig) -> Result<usize, LearnError> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch {
            features: x.len(),
            targets: y.len(),
        });
    }
    let dim = x[0].dim();
    if let Some(row) = x.iter().find(|r| r.dim() != dim) {
        return Err(LearnError::DimensionMismatch {
            expected: dim,
            found: row.dim(),
        });
    }
    Ok(dim)
}

fn label_counts(y: &[LabelSet]) -> [usize; ConcernLabel::COUNT] {
    let mut counts = [0; ConcernLabel::COUNT];
    for set in y {
        for l in set.iter() {
            counts[l.ordinal()] += 1;
        }
    }
    counts
}

/// Most frequent training label, lowest ordinal on ties.
fn most_frequent(y: &[LabelSet]) -> ConcernLabel {
    let counts = label_counts(y);
    let best = (0..ConcernLabel::COUNT)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
        .unwrap();
    ConcernLabel::from_ordinal(best).unwrap()
}

fn fit_one(
    label: ConcernLabel,
    x: &[SparseVector],
    y: &[bool],
    base: LearnerKind,
    cfg: &TrainConfig,
) -> Result<BaseModel, LearnError> {
    let dim = x[0].dim();
    let positives = y.iter().filter(|v| **v).count();
    if positives < 2 {
        if positives > 0 {
            log::warn!(
                "label `{label}` occurs {positives} time(s); using a constant-negative classifier"
            );
        }
        return Ok(BaseModel::Constant {
            positive: false,
            dim,
        });
    }
    if positives == y.len() {
        log::warn!(
            "label `{label}` occurs on every training row; using a constant-positive classifier"
        );
        return Ok(BaseModel::Constant {
            positive: true,
            dim,
        });
    }
    fit_base(
        base,
        x,
        y,
        cfg,
        SeededRng::derive(cfg.seed, label.ordinal() as u64).next_u64(),
    )
}

/// Union of decisions, or the best-scoring trained label if the union is empty.
fn finish(
    decided: LabelSet,
    scores: &[f64; ConcernLabel::COUNT],
    trained: impl Fn(ConcernLabel) -> bool,
    fallback: ConcernLabel,
) -> LabelSet {
    if !decided.is_empty() {
        return decided.normalized();
    }
    let best = ConcernLabel::ALL
        .iter()
        .copied()
        .filter(|l| trained(*l))
        .fold(None, |best: Option<ConcernLabel>, l| match best {
            Some(b) if scores[b.ordinal()] >= scores[l.ordinal()] => Some(b),
            _ => Some(l),
        });
    LabelSet::single(best.unwrap_or(fallback))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRelevance {
    base: LearnerKind,
    threshold: f64,
    dim: usize,
    fallback: ConcernLabel,
    /// One classifier per label, by ordinal.
    classifiers: Vec<BaseModel>,
}

pub fn fit_binary_relevance(
    x: &[SparseVector],
    y: &[LabelSet],
    base: LearnerKind,
    cfg: &TrainConfig,
) -> Result<BinaryRelevance, LearnError> {
    let dim = check_input(x, y, cfg)?;
    let classifiers = ConcernLabel::ALL
        .par_iter()
        .map(|&label| {
            let targets: Vec<bool> = y.iter().map(|s| s.contains(label)).collect();
            fit_one(label, x, &targets, base, cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BinaryRelevance {
        base,
        threshold: cfg.threshold,
        dim,
        fallback: most_frequent(y),
        classifiers,
    })
}

impl BinaryRelevance {
    pub fn base(&self) -> LearnerKind {
        self.base
    }

    pub fn classifier(&self, label: ConcernLabel) -> &BaseModel {
        &self.classifiers[label.ordinal()]
    }

    /// Per-label decisions before the empty-set fallback.
    pub fn raw_decisions(&self, x: &SparseVector) -> LabelSet {
        ConcernLabel::ALL
            .iter()
            .copied()
            .filter(|l| self.classifier(*l).decide(x, self.threshold))
            .collect()
    }
}

impl MultiLabelModel for BinaryRelevance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: &SparseVector) -> Result<[f64; ConcernLabel::COUNT], LearnError> {
        if x.dim() != self.dim {
            return Err(LearnError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(std::array::from_fn(|k| self.classifiers[k].score(x)))
    }

    fn predict(&self, x: &SparseVector) -> Result<LabelSet, LearnError> {
        let scores = self.scores(x)?;
        let decided = ConcernLabel::ALL
            .iter()
            .copied()
            .filter(|l| scores[l.ordinal()] >= self.threshold)
            .collect();
        Ok(finish(
            decided,
            &scores,
            |l| !self.classifier(l).is_stub(),
            self.fallback,
        ))
    }
}

/// A permutation of the twelve labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ConcernLabel>", into = "Vec<ConcernLabel>")]
pub struct ChainOrder(Vec<ConcernLabel>);

impl ChainOrder {
    pub fn new(order: Vec<ConcernLabel>) -> Result<Self, LearnError> {
        let mut seen = LabelSet::empty();
        for &l in &order {
            if seen.contains(l) {
                return Err(LearnError::InvalidChainOrder(format!(
                    "`{l}` appears twice"
                )));
            }
            seen.insert(l);
        }
        if order.len() != ConcernLabel::COUNT {
            return Err(LearnError::InvalidChainOrder(format!(
                "expected {} labels, got {}",
                ConcernLabel::COUNT,
                order.len()
            )));
        }
        Ok(ChainOrder(order))
    }

    /// Training frequency, descending; ties by label name.
    pub fn by_frequency(y: &[LabelSet]) -> Self {
        let counts = label_counts(y);
        let mut order = ConcernLabel::ALL.to_vec();
        order.sort_by(|a, b| {
            counts[b.ordinal()]
                .cmp(&counts[a.ordinal()])
                .then_with(|| a.name().cmp(b.name()))
        });
        ChainOrder(order)
    }

    pub fn random(seed: u64) -> Self {
        let mut order = ConcernLabel::ALL.to_vec();
        SeededRng::new(seed).shuffle(&mut order);
        ChainOrder(order)
    }

    pub fn labels(&self) -> &[ConcernLabel] {
        &self.0
    }
}

impl TryFrom<Vec<ConcernLabel>> for ChainOrder {
    type Error = LearnError;

    fn try_from(v: Vec<ConcernLabel>) -> Result<Self, Self::Error> {
        ChainOrder::new(v)
    }
}

impl From<ChainOrder> for Vec<ConcernLabel> {
    fn from(o: ChainOrder) -> Self {
        o.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierChain {
    base: LearnerKind,
    threshold: f64,
    dim: usize,
    fallback: ConcernLabel,
    order: ChainOrder,
    /// Link `k` predicts `order[k]` from `dim + k` features.
    links: Vec<BaseModel>,
}

pub fn fit_classifier_chain(
    x: &[SparseVector],
    y: &[LabelSet],
    order: ChainOrder,
    base: LearnerKind,
    cfg: &TrainConfig,
) -> Result<ClassifierChain, LearnError> {
    let dim = check_input(x, y, cfg)?;
    let labels = order.labels().to_vec();
    let links = (0..labels.len())
        .into_par_iter()
        .map(|k| {
            let design: Vec<SparseVector> = x
                .iter()
                .zip(y)
                .map(|(row, gold)| {
                    let prior: Vec<bool> = labels[..k].iter().map(|l| gold.contains(*l)).collect();
                    row.augment(&prior)
                })
                .collect();
            let targets: Vec<bool> = y.iter().map(|s| s.contains(labels[k])).collect();
            fit_one(labels[k], &design, &targets, base, cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClassifierChain {
        base,
        threshold: cfg.threshold,
        dim,
        fallback: most_frequent(y),
        order,
        links,
    })
}

impl ClassifierChain {
    pub fn base(&self) -> LearnerKind {
        self.base
    }

    pub fn order(&self) -> &ChainOrder {
        &self.order
    }

    pub fn links(&self) -> &[BaseModel] {
        &self.links
    }

    /// Row for link `k`: the features followed by the indicators of
    /// `order[..k]` taken from `labels`.
    pub fn augment(&self, x: &SparseVector, labels: LabelSet, k: usize) -> SparseVector {
        let prior: Vec<bool> = self.order.0[..k]
            .iter()
            .map(|l| labels.contains(*l))
            .collect();
        x.augment(&prior)
    }

    fn run(&self, x: &SparseVector) -> Result<([f64; ConcernLabel::COUNT], LabelSet), LearnError> {
        if x.dim() != self.dim {
            return Err(LearnError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let mut scores = [0.0; ConcernLabel::COUNT];
        let mut indicators = Vec::with_capacity(self.links.len());
        let mut decided = LabelSet::empty();
        for (k, link) in self.links.iter().enumerate() {
            let label = self.order.0[k];
            let s = link.score(&x.augment(&indicators));
            scores[label.ordinal()] = s;
            let on = s >= self.threshold;
            if on {
                decided.insert(label);
            }
            indicators.push(on);
        }
        Ok((scores, decided))
    }

    fn link_of(&self, label: ConcernLabel) -> &BaseModel {
        let k = self.order.0.iter().position(|l| *l == label).unwrap();
        &self.links[k]
    }
}

impl MultiLabelModel for ClassifierChain {
    fn dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: &SparseVector) -> Result<[f64; ConcernLabel::COUNT], LearnError> {
        Ok(self.run(x)?.0)
    }

    fn predict(&self, x: &SparseVector) -> Result<LabelSet, LearnError> {
        let (scores, decided) = self.run(x)?;
        Ok(finish(
            decided,
            &scores,
            |l| !self.link_of(l).is_stub(),
            self.fallback,
        ))
    }
}
