//! Text-to-labels pipelines for the classical learners: preprocessing,
//! TF-IDF features, a multi-label model, and the file that stores them.

use std::fmt;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    fit_binary_relevance, fit_classifier_chain, predict_batch, BinaryRelevance, ChainOrder,
    ClassifierChain, LearnerKind, MultiLabelModel, TrainConfig,
};
use crate::corpus::Dataset;
use crate::error::{Error, LearnError, Result};
use crate::features::{SparseVector, TfidfMode, TfidfModel};
use crate::labels::{ConcernLabel, LabelSet};
use crate::textprep::{PipelineConfig, Preprocessor};

/// Run-file method tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mnb,
    Svm,
    Rf,
    /// Binary relevance over the configured base learner.
    Br,
    /// Classifier chain over the configured base learner.
    Cc,
    Llm,
}

impl Method {
    pub const CLASSICAL: [Method; 5] =
        [Method::Mnb, Method::Svm, Method::Rf, Method::Br, Method::Cc];

    /// Base learner, with `base` used by the wrapper methods.
    pub fn learner(self, base: LearnerKind) -> Option<LearnerKind> {
        match self {
            Method::Mnb => Some(LearnerKind::Mnb),
            Method::Svm => Some(LearnerKind::Svm),
            Method::Rf => Some(LearnerKind::Rf),
            Method::Br | Method::Cc => Some(base),
            Method::Llm => Option::None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mnb => "mnb",
            Method::Svm => "svm",
            Method::Rf => "rf",
            Method::Br => "br",
            Method::Cc => "cc",
            Method::Llm => "llm",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mnb" => Ok(Method::Mnb),
            "svm" => Ok(Method::Svm),
            "rf" => Ok(Method::Rf),
            "br" => Ok(Method::Br),
            "cc" => Ok(Method::Cc),
            "llm" => Ok(Method::Llm),
            other => Err(format!(
                "unknown method `{other}` (expected mnb, svm, rf, br, cc or llm)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainOrderSpec {
    Frequency,
    Random,
    Explicit(Vec<ConcernLabel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassicalConfig {
    pub base: LearnerKind,
    pub tfidf: TfidfMode,
    pub min_df: usize,
    pub chain_order: ChainOrderSpec,
    pub train: TrainConfig,
    pub preprocess: PipelineConfig,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        ClassicalConfig {
            base: LearnerKind::Svm,
            tfidf: TfidfMode::SmoothL2,
            min_df: 1,
            chain_order: ChainOrderSpec::Frequency,
            train: TrainConfig::default(),
            preprocess: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Fitted {
    Br(BinaryRelevance),
    Cc(ClassifierChain),
}

impl Fitted {
    fn predict_all(&self, x: &[SparseVector]) -> std::result::Result<Vec<LabelSet>, LearnError> {
        match self {
            Fitted::Br(m) => predict_batch(m, x),
            Fitted::Cc(m) => predict_batch(m, x),
        }
    }

    pub fn as_model(&self) -> &dyn MultiLabelModel {
        match self {
            Fitted::Br(m) => m,
            Fitted::Cc(m) => m,
        }
    }
}

/// A fitted pipeline from raw text to label sets.
#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub method: Method,
    pub learner: LearnerKind,
    pub preprocess: PipelineConfig,
    pub tfidf: TfidfModel,
    pub model: Fitted,
    prep: Preprocessor,
}

/// Lemmatized tokens for every record, in order.
pub fn tokenize_dataset(prep: &Preprocessor, ds: &Dataset) -> Vec<Vec<String>> {
    ds.records
        .par_iter()
        .map(|r| prep.preprocess(&r.text))
        .collect()
}

fn rows(tfidf: &TfidfModel, learner: LearnerKind, docs: &[Vec<String>]) -> Vec<SparseVector> {
    docs.par_iter()
        .map(|d| {
            if learner.uses_counts() {
                tfidf.count_vector(d)
            } else {
                tfidf.transform(d)
            }
        })
        .collect()
}

pub fn train_pipeline(
    train: &Dataset,
    method: Method,
    cfg: &ClassicalConfig,
) -> Result<TrainedPipeline> {
    let learner = method
        .learner(cfg.base)
        .ok_or_else(|| LearnError::InvalidConfig("the llm method has no classical model".into()))?;
    cfg.train.validate()?;
    let prep = Preprocessor::new(cfg.preprocess.clone())?;
    let gold = train.gold()?;
    let docs = tokenize_dataset(&prep, train);
    let tfidf = TfidfModel::fit(&docs, cfg.min_df, cfg.tfidf)?;
    let x = rows(&tfidf, learner, &docs);
    let model = if method == Method::Cc {
        let order = match &cfg.chain_order {
            ChainOrderSpec::Frequency => ChainOrder::by_frequency(&gold),
            ChainOrderSpec::Random => ChainOrder::random(cfg.train.seed),
            ChainOrderSpec::Explicit(v) => ChainOrder::new(v.clone())?,
        };
        Fitted::Cc(fit_classifier_chain(&x, &gold, order, learner, &cfg.train)?)
    } else {
        Fitted::Br(fit_binary_relevance(&x, &gold, learner, &cfg.train)?)
    };
    Ok(TrainedPipeline {
        method,
        learner,
        preprocess: cfg.preprocess.clone(),
        tfidf,
        model,
        prep,
    })
}

const MODEL_FORMAT: &str = "vaxconcern-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    method: Method,
    learner: LearnerKind,
    preprocess: PipelineConfig,
    /// The TF-IDF model in its own text format.
    tfidf: String,
    model: Fitted,
}

impl TrainedPipeline {
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<LabelSet>> {
        let docs = tokenize_dataset(&self.prep, ds);
        let x = rows(&self.tfidf, self.learner, &docs);
        Ok(self.model.predict_all(&x)?)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut tfidf = Vec::new();
        self.tfidf.write(&mut tfidf)?;
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            method: self.method,
            learner: self.learner,
            preprocess: self.preprocess.clone(),
            tfidf: String::from_utf8(tfidf).map_err(|e| Error::Model(e.to_string()))?,
            model: self.model.clone(),
        };
        serde_json::to_writer(out, &file).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_reader(input).map_err(|e| Error::Model(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        let tfidf = TfidfModel::read(BufReader::new(file.tfidf.as_bytes()))?;
        if tfidf.dim() != file.model.as_model().dim() {
            return Err(Error::Model(
                "feature dimension does not match the model".into(),
            ));
        }
        Ok(TrainedPipeline {
            method: file.method,
            learner: file.learner,
            prep: Preprocessor::new(file.preprocess.clone())?,
            preprocess: file.preprocess,
            tfidf,
            model: file.model,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(std::fs::File::open(path)?))
    }
}
