use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabelError {
    #[error("unknown concern label `{0}`")]
    Unknown(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("row {row}: malformed record: {message}")]
    Malformed { row: u64, message: String },
    #[error("row {row}: unknown label token `{token}`")]
    UnknownLabel { row: u64, token: String },
    #[error("row {row}: empty label set")]
    EmptyLabels { row: u64 },
    #[error("row {row}: empty id")]
    EmptyId { row: u64 },
    #[error("row {row}: duplicate id `{id}`")]
    DuplicateId { row: u64, id: String },
    #[error("record `{id}` has no gold labels")]
    Unlabeled { id: String },
    #[error("run file does not match the gold data: {0}")]
    Alignment(String),
    #[error("split ratio {ratio} over {n} records leaves a partition empty")]
    DegenerateSplit { ratio: f64, n: usize },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("cannot read asset {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{name}:{line}: {message}")]
    Format {
        name: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on zero documents")]
    NoDocuments,
    #[error("no term reaches min_df = {min_df}")]
    EmptyVocabulary { min_df: usize },
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("term frequency is undefined for an empty document")]
    EmptyDocument,
    #[error("sparse vector entry {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("sparse vector indices must be strictly increasing")]
    Unsorted,
    #[error("sparse vector weight at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("training targets contain a single class")]
    SingleClass,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("{features} feature rows but {targets} targets")]
    LengthMismatch { features: usize, targets: usize },
    #[error("feature dimension {found} does not match the fitted dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid chain order: {0}")]
    InvalidChainOrder(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{gold} gold rows but {pred} predicted rows")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("empty label universe")]
    EmptyUniverse,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("no line beginning with `Concern:`")]
    NoConcernLine,
    #[error("no valid concern label in `{0}`")]
    EmptyLabels(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited (HTTP 429): {body}")]
    RateLimited { body: String },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("mock backend has no completion for digest {0}")]
    MockMiss(String),
    #[error("missing API key (set LLM_API_KEY)")]
    MissingApiKey,
    #[error("empty prompt")]
    EmptyPrompt,
}

impl BackendError {
    /// Errors that no retry can fix.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            BackendError::MissingApiKey | BackendError::EmptyPrompt
        )
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("exemplar selection needs n >= 12, got {0}")]
    TooFewExemplars(usize),
    #[error("exemplar selection asks for {requested} records but only {available} exist")]
    NotEnoughRecords { requested: usize, available: usize },
    #[error("label `{0}` does not occur in the exemplar pool")]
    LabelAbsent(String),
    #[error("record `{0}` has no gold labels")]
    Unlabeled(String),
    #[error("prompt assets: {0}")]
    Assets(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("cache: {0}")]
    Cache(String),
}

/// Crate-wide error, grouped into the classes the command line reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Backend,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Asset(_) => ErrorClass::Config,
            Error::Learn(LearnError::InvalidConfig(_) | LearnError::InvalidChainOrder(_)) => {
                ErrorClass::Config
            }
            Error::Llm(LlmError::Backend(e)) if e.is_config() => ErrorClass::Config,
            Error::Llm(LlmError::Backend(_) | LlmError::Cache(_)) => ErrorClass::Backend,
            Error::Llm(LlmError::Assets(_)) => ErrorClass::Config,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
