//! Binary learners and their multi-label wrappers.
//!
//! Every learner produces a [`BinaryClassifier`] with a score in `[0, 1]`.
//! [`BinaryRelevance`] trains one classifier per concern label and
//! [`ClassifierChain`] feeds earlier labels' indicators into later links.
//!
//! Feature routing follows the learner: multinomial NB expects raw counts,
//! the SVM and the forest expect TF-IDF rows. That choice lives with the
//! caller (see [`LearnerKind::uses_counts`]).

mod forest;
mod mnb;
mod multilabel;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use forest::{fit_random_forest, ForestParams, RandomForest};
pub use mnb::{fit_mnb, MultinomialNb};
pub use multilabel::{
    fit_binary_relevance, fit_classifier_chain, predict_batch, BinaryRelevance, ChainOrder,
    ClassifierChain, MultiLabelModel,
};
pub use svm::{fit_linear_svm, objective as svm_objective, LinearSvm, SvmParams};

use crate::error::LearnError;
use crate::features::SparseVector;

pub trait BinaryClassifier {
    /// Confidence for the positive class, in `[0, 1]`.
    fn score(&self, x: &SparseVector) -> f64;

    /// Input dimension the classifier was fitted on.
    fn dim(&self) -> usize;

    fn decide(&self, x: &SparseVector, threshold: f64) -> bool {
        self.score(x) >= threshold
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Validates a binary training set and returns its common dimension.
pub(crate) fn check_rows(x: &[SparseVector], y: &[bool]) -> Result<usize, LearnError> {
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
    let positives = y.iter().filter(|v| **v).count();
    if positives == 0 || positives == y.len() {
        return Err(LearnError::SingleClass);
    }
    Ok(dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Mnb,
    Svm,
    Rf,
}

impl LearnerKind {
    /// Naive Bayes is fitted on raw term counts, the others on TF-IDF.
    pub fn uses_counts(self) -> bool {
        matches!(self, LearnerKind::Mnb)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Mnb => "mnb",
            LearnerKind::Svm => "svm",
            LearnerKind::Rf => "rf",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mnb" => Ok(LearnerKind::Mnb),
            "svm" => Ok(LearnerKind::Svm),
            "rf" => Ok(LearnerKind::Rf),
            other => Err(LearnError::InvalidConfig(format!(
                "unknown learner `{other}`"
            ))),
        }
    }
}

/// Hyperparameters shared by all multi-label fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub threshold: f64,
    pub seed: u64,
    /// Naive Bayes additive smoothing.
    pub alpha: f64,
    pub svm: SvmParams,
    pub forest: ForestParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            threshold: 0.5,
            seed: 42,
            alpha: 1.0,
            svm: SvmParams::default(),
            forest: ForestParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: String| Err(LearnError::InvalidConfig(m));
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            ));
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.svm.lambda > 0.0) || self.svm.epochs == 0 {
            return bad(format!(
                "svm needs lambda > 0 and epochs >= 1, got {:?}",
                self.svm
            ));
        }
        let f = &self.forest;
        if f.trees == 0 || f.max_depth == 0 || f.min_split < 2 {
            return bad(format!(
                "forest needs trees, max_depth >= 1 and min_split >= 2, got {f:?}"
            ));
        }
        Ok(())
    }
}

/// A fitted per-label classifier, including the constant stubs used for
/// labels that are too rare (or universal) to train on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseModel {
    Mnb(MultinomialNb),
    Svm(LinearSvm),
    Rf(RandomForest),
    Constant { positive: bool, dim: usize },
}

impl BaseModel {
    pub fn is_stub(&self) -> bool {
        matches!(self, BaseModel::Constant { .. })
    }
}

impl BinaryClassifier for BaseModel {
    fn score(&self, x: &SparseVector) -> f64 {
        match self {
            BaseModel::Mnb(m) => m.score(x),
            BaseModel::Svm(m) => m.score(x),
            BaseModel::Rf(m) => m.score(x),
            BaseModel::Constant { positive, .. } => {
                if *positive {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            BaseModel::Mnb(m) => m.dim(),
            BaseModel::Svm(m) => m.dim(),
            BaseModel::Rf(m) => m.dim(),
            BaseModel::Constant { dim, .. } => *dim,
        }
    }
}

pub fn fit_base(
    kind: LearnerKind,
    x: &[SparseVector],
    y: &[bool],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<BaseModel, LearnError> {
    Ok(match kind {
        LearnerKind::Mnb => BaseModel::Mnb(fit_mnb(x, y, cfg.alpha)?),
        LearnerKind::Svm => BaseModel::Svm(fit_linear_svm(x, y, cfg.svm, seed)?),
        LearnerKind::Rf => BaseModel::Rf(fit_random_forest(x, y, &cfg.forest, seed)?),
    })
}
