//! Prompted classification through a completions endpoint.
//!
//! [`build_prompt`] renders the few-shot template, a [`Backend`] completes
//! it, and [`parse_response`] reads the labels back. [`classify_llm`] ties
//! these together with a [`ResponseCache`] and retries; a tweet that never
//! yields a usable answer is labelled `none`.

mod backend;
mod cache;
mod prompt;
mod response;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use backend::{
    escape_cell, keyword_completion, keyword_labels, unescape_cell, wire_payload, Backend,
    HttpBackend, MockBackend, MockFallback, API_KEY_VAR,
};
pub use cache::{CacheRecord, ResponseCache};
pub use prompt::{
    build_prompt, extract_tweet, sanitize, select_exemplars, Exemplar, ExemplarSet, Prompt,
    PromptAssets, DELIMITER,
};
pub use response::{parse_response, render_label_list, render_response, ParsedLlmOutput};

use crate::error::{BackendError, LlmError};
use crate::labels::{ConcernLabel, LabelSet};

pub const FORMAT_REMINDER: &str = "Respond strictly in the required format.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for LlmParams {
    fn default() -> Self {
        LlmParams {
            model: "text-davinci-003".to_string(),
            temperature: 0.0,
            max_tokens: 100,
        }
    }
}

/// Hex SHA-256 of the wire payload.
pub fn request_digest(prompt: &str, params: &LlmParams) -> String {
    hex::encode(Sha256::digest(
        wire_payload(prompt, params).to_string().as_bytes(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Delay before the first transport retry; multiplied by `factor` each time.
    pub backoff_ms: u64,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 2,
            backoff_ms: 1000,
            factor: 4,
        }
    }
}

impl RetryPolicy {
    /// Wait before transport retry number `k` (1-based).
    pub fn delay(&self, k: u32) -> Duration {
        let mult = (self.factor as u64).saturating_pow(k.saturating_sub(1));
        Duration::from_millis(self.backoff_ms.saturating_mul(mult))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Cache,
    Backend,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub digest: String,
    pub source: Source,
    /// Backend calls made for this tweet.
    pub attempts: u32,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmOutcome {
    pub labels: LabelSet,
    pub reasoning: String,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

/// Everything `classify_llm` needs besides the tweet.
pub struct LlmContext<'a> {
    pub backend: &'a dyn Backend,
    pub cache: &'a ResponseCache,
    pub assets: &'a PromptAssets,
    pub exemplars: &'a ExemplarSet,
    pub params: &'a LlmParams,
    pub policy: RetryPolicy,
}

enum Failure {
    Transport(BackendError),
    Parse(String),
}

/// Labels one tweet.
///
/// Only configuration errors (such as a missing API key on a cache miss)
/// are returned as `Err`; every other failure yields `{none}` with the
/// cause in the provenance.
pub fn classify_llm(tweet: &str, ctx: &LlmContext<'_>) -> Result<LlmOutcome, LlmError> {
    let prompt = build_prompt(tweet, ctx.assets, ctx.exemplars);
    let digest = request_digest(&prompt.text, ctx.params);
    let outcome = |parsed: ParsedLlmOutput, source, attempts| {
        let mut warnings = prompt.warnings.clone();
        warnings.extend(parsed.warnings);
        LlmOutcome {
            labels: parsed.labels,
            reasoning: parsed.reasoning,
            warnings,
            provenance: Provenance {
                digest: digest.clone(),
                source,
                attempts,
                error: Option::None,
            },
        }
    };

    if let Some(cached) = ctx.cache.get(&digest) {
        match parse_response(&cached) {
            Ok(p) => return Ok(outcome(p, Source::Cache, 0)),
            Err(e) => log::warn!("cached completion {digest} does not parse ({e}); refetching"),
        }
    }

    let mut last: Option<Failure> = Option::None;
    let mut transport_retries = 0;
    let mut attempts = 0;
    for _ in 0..=ctx.policy.max_retries {
        let sent = match &last {
            Some(Failure::Parse(_)) => format!("{}{FORMAT_REMINDER}\n", prompt.text),
            Some(Failure::Transport(_)) => {
                transport_retries += 1;
                std::thread::sleep(ctx.policy.delay(transport_retries));
                prompt.text.clone()
            }
            Option::None => prompt.text.clone(),
        };
        attempts += 1;
        match ctx.backend.complete(&sent, ctx.params) {
            Err(e) if e.is_config() => return Err(e.into()),
            Err(e) => {
                log::warn!("backend error for {digest}: {e}");
                last = Some(Failure::Transport(e));
            }
            Ok(text) => match parse_response(&text) {
                Ok(p) => {
                    ctx.cache.insert(CacheRecord {
                        digest: digest.clone(),
                        prompt: sent,
                        params: ctx.params.clone(),
                        completion: text,
                        timestamp: chrono::Utc::now().to_rfc3339(),
                    })?;
                    return Ok(outcome(p, Source::Backend, attempts));
                }
                Err(e) => {
                    log::warn!("unparseable completion for {digest}: {e}");
                    last = Some(Failure::Parse(e.to_string()));
                }
            },
        }
    }

    let error = match last {
        Some(Failure::Transport(e)) => e.to_string(),
        Some(Failure::Parse(e)) => format!("parse failure: {e}"),
        Option::None => "no attempt made".to_string(),
    };
    let mut warnings = prompt.warnings;
    warnings.push(format!("failed after {attempts} attempts: {error}"));
    Ok(LlmOutcome {
        labels: LabelSet::single(ConcernLabel::None),
        reasoning: String::new(),
        warnings,
        provenance: Provenance {
            digest,
            source: Source::Failed,
            attempts,
            error: Some(error),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use std::sync::Mutex;
    use ConcernLabel::*;

    fn exemplars() -> ExemplarSet {
        ExemplarSet::new(
            ConcernLabel::ALL
                .iter()
                .map(|l| Exemplar {
                    id: l.to_string(),
                    text: format!("about {l}"),
                    labels: LabelSet::single(*l),
                })
                .collect(),
        )
        .unwrap()
    }

    fn no_wait() -> RetryPolicy {
        RetryPolicy {
            backoff_ms: 0,
            ..Default::default()
        }
    }

    struct Scripted {
        replies: Mutex<Vec<Result<String, BackendError>>>,
        prompts: Mutex<Vec<String>>,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<String, BackendError>>) -> Self {
            replies.reverse();
            Scripted {
                replies: Mutex::new(replies),
                prompts: Mutex::new(Vec::new()),
            }
        }
    }

    impl Backend for Scripted {
        fn complete(&self, prompt: &str, _: &LlmParams) -> Result<String, BackendError> {
            self.prompts.lock().unwrap().push(prompt.to_string());
            self.replies
                .lock()
                .unwrap()
                .pop()
                .expect("script exhausted")
        }

        fn calls(&self) -> usize {
            self.prompts.lock().unwrap().len()
        }
    }

    fn run(
        backend: &dyn Backend,
        cache: &ResponseCache,
        tweet: &str,
    ) -> Result<LlmOutcome, LlmError> {
        let assets = PromptAssets::builtin();
        let ex = exemplars();
        let params = LlmParams::default();
        classify_llm(
            tweet,
            &LlmContext {
                backend,
                cache,
                assets: &assets,
                exemplars: &ex,
                params: &params,
                policy: no_wait(),
            },
        )
    }

    #[test]
    fn fixed_completion_then_cache_hit() {
        let mock =
            MockBackend::fixed("Concern: ['pharma', 'rushed']\nReasoning: Profit and speed.");
        let cache = ResponseCache::in_memory();
        let a = run(&mock, &cache, "tweet").unwrap();
        assert_eq!(a.labels, [Pharma, Rushed].into_iter().collect());
        assert_eq!(a.provenance.source, Source::Backend);
        assert_eq!(cache.len(), 1);
        assert_eq!(mock.calls(), 1);

        let b = run(&mock, &cache, "tweet").unwrap();
        assert_eq!((b.labels, &b.reasoning), (a.labels, &a.reasoning));
        assert_eq!(b.provenance.source, Source::Cache);
        assert_eq!(mock.calls(), 1);
        assert_eq!(cache.hits(), 1);
    }

    #[test]
    fn garbage_exhausts_retries() {
        let mock = MockBackend::fixed("I cannot help with that");
        let cache = ResponseCache::in_memory();
        let out = run(&mock, &cache, "tweet").unwrap();
        assert_eq!(out.labels, LabelSet::single(None));
        assert_eq!(out.provenance.source, Source::Failed);
        assert_eq!(out.provenance.attempts, 3);
        assert!(out.provenance.error.unwrap().contains("Concern:"));
        assert_eq!(mock.calls(), 3);
        assert!(cache.is_empty());
    }

    #[test]
    fn parse_retry_adds_reminder_and_caches_under_original_digest() {
        let s = Scripted::new(vec![
            Ok("nonsense".into()),
            Ok("Concern: ['religious']".into()),
        ]);
        let cache = ResponseCache::in_memory();
        let out = run(&s, &cache, "tweet").unwrap();
        assert_eq!(out.labels, LabelSet::single(Religious));
        assert_eq!(out.provenance.attempts, 2);
        let prompts = s.prompts.lock().unwrap().clone();
        assert!(!prompts[0].contains(FORMAT_REMINDER));
        assert!(prompts[1].ends_with(&format!("{FORMAT_REMINDER}\n")));
        let again = run(&s, &cache, "tweet").unwrap();
        assert_eq!(again.provenance.source, Source::Cache);
    }

    #[test]
    fn transport_errors_are_retried() {
        let s = Scripted::new(vec![
            Err(BackendError::RateLimited {
                body: String::new(),
            }),
            Err(BackendError::Transport("reset".into())),
            Ok("Concern: ['country']".into()),
        ]);
        let out = run(&s, &ResponseCache::in_memory(), "tweet").unwrap();
        assert_eq!(out.labels, LabelSet::single(Country));
        let prompts = s.prompts.lock().unwrap();
        assert!(prompts.iter().all(|p| !p.contains(FORMAT_REMINDER)));
    }

    #[test]
    fn missing_key_aborts_only_when_cache_is_cold() {
        let http =
            HttpBackend::new("http://127.0.0.1:9", Option::None, Duration::from_secs(1)).unwrap();
        let cache = ResponseCache::in_memory();
        assert!(matches!(
            run(&http, &cache, "tweet"),
            Err(LlmError::Backend(BackendError::MissingApiKey))
        ));

        let warm = MockBackend::fixed("Concern: ['pharma']");
        run(&warm, &cache, "tweet").unwrap();
        let out = run(&http, &cache, "tweet").unwrap();
        assert_eq!(out.provenance.source, Source::Cache);
        assert_eq!(http.calls(), 0);
    }

    #[test]
    fn mock_keyed_by_digest() {
        let assets = PromptAssets::builtin();
        let prompt = build_prompt("tweet", &assets, &exemplars());
        let digest = request_digest(&prompt.text, &LlmParams::default());
        let table = HashMap::from([(digest, "Concern: ['ingredients']".to_string())]);
        let mock = MockBackend::new(table, MockFallback::Fail);
        let out = run(&mock, &ResponseCache::in_memory(), "tweet").unwrap();
        assert_eq!(out.labels, LabelSet::single(Ingredients));
    }

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(1), Duration::from_secs(1));
        assert_eq!(p.delay(2), Duration::from_secs(4));
    }

    #[test]
    fn digest_is_sha256_hex_of_payload() {
        let d = request_digest("p", &LlmParams::default());
        assert_eq!(d.len(), 64);
        let other = LlmParams {
            max_tokens: 50,
            ..Default::default()
        };
        assert_ne!(d, request_digest("p", &other));
    }
}
