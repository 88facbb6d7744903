use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vaxconcern::assets::AssetSource;
use vaxconcern::llm::{LlmParams, RetryPolicy};
use vaxconcern::{ClassicalConfig, EvalPolicy};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_JOBS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub split: SplitConfig,
    pub eda: EdaConfig,
    pub classical: ClassicalConfig,
    pub llm: LlmConfig,
    pub eval: EvalPolicy,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: DEFAULT_SEED,
            jobs: DEFAULT_JOBS,
            out: PathBuf::from("runs"),
            split: SplitConfig::default(),
            eda: EdaConfig::default(),
            classical: ClassicalConfig::default(),
            llm: LlmConfig::default(),
            eval: EvalPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratio: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdaConfig {
    pub top_terms: usize,
}

impl Default for EdaConfig {
    fn default() -> Self {
        EdaConfig { top_terms: 20 }
    }
}

/// Which form of the tweet goes into the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptText {
    Clean,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub endpoint: String,
    pub timeout_secs: u64,
    /// Response cache file; relative paths resolve against the output directory.
    pub cache: PathBuf,
    pub exemplars: usize,
    pub text: PromptText,
    pub concurrency: usize,
    pub retry: RetryPolicy,
    pub descriptions: AssetSource,
    pub keywords: AssetSource,
    pub template: AssetSource,
}

impl Default for LlmConfig {
    fn default() -> Self {
        let p = LlmParams::default();
        LlmConfig {
            model: p.model,
            temperature: p.temperature,
            max_tokens: p.max_tokens,
            endpoint: "https://api.openai.com/v1/completions".to_string(),
            timeout_secs: 60,
            cache: PathBuf::from("llm_cache.jsonl"),
            exemplars: 58,
            text: PromptText::Clean,
            concurrency: 4,
            retry: RetryPolicy::default(),
            descriptions: AssetSource::Builtin,
            keywords: AssetSource::Builtin,
            template: AssetSource::Builtin,
        }
    }
}

impl LlmConfig {
    pub fn params(&self) -> LlmParams {
        LlmParams {
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Config, String> {
        let cfg: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.jobs == 0 || self.llm.concurrency == 0 {
            return Err("jobs and llm.concurrency must be at least 1".into());
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(format!(
                "split.ratio must be in (0, 1), got {}",
                self.split.ratio
            ));
        }
        self.classical.train.validate().map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_default_file_matches_defaults() {
        let cfg = Config::parse(include_str!("../default.toml")).unwrap();
        assert_eq!(cfg, Config::default());
    }

    #[test]
    fn partial_files_and_unknown_keys() {
        let cfg = Config::parse("seed = 7\n[classical.train.svm]\nepochs = 3\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.classical.train.svm.epochs, 3);
        assert_eq!(cfg.classical.train.svm.lambda, 1e-4);
        assert!(Config::parse("sed = 7\n").is_err());
        assert!(Config::parse("[split]\nratio = 1.5\n").is_err());
    }
}
