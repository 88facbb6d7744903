//! Multi-label classification of vaccine-concern tweets.
//!
//! Two independent paths label a tweet with one or more of twelve concerns:
//! classical learners over TF-IDF features ([`classical`], [`pipeline`]) and
//! a prompted completions model ([`llm`]). Both are scored by [`eval`].

pub mod assets;
pub mod classical;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod labels;
pub mod llm;
pub mod pipeline;
pub mod rng;
pub mod runfile;
pub mod synthetic;
pub mod textprep;

pub use corpus::{Dataset, DatasetFormat, TweetRecord};
pub use error::{Error, ErrorClass, Result};
pub use eval::{evaluate, evaluate_over, EvalPolicy, MetricsReport};
pub use features::{SparseVector, TfidfMode, TfidfModel};
pub use labels::{ConcernLabel, LabelSet};
pub use pipeline::{train_pipeline, ClassicalConfig, Method, TrainedPipeline};
pub use rng::SeededRng;
pub use textprep::{PipelineConfig, Preprocessor};
