//! Completion backends: an HTTP client for completions-style endpoints and
//! a deterministic mock.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde_json::{json, Value};

use crate::error::BackendError;
use crate::labels::{ConcernLabel, LabelSet};

use super::prompt::{extract_tweet, PromptAssets};
use super::response::render_response;
use super::{request_digest, LlmParams};

pub const API_KEY_VAR: &str = "LLM_API_KEY";

pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, BackendError>;

    /// Number of `complete` calls made so far.
    fn calls(&self) -> usize;
}

/// The JSON body sent to the endpoint. Integral temperatures are written
/// as integers.
pub fn wire_payload(prompt: &str, params: &LlmParams) -> Value {
    let t = params.temperature;
    let temperature = if t.fract() == 0.0 && t.abs() < 1e15 {
        Value::from(t as i64)
    } else {
        Value::from(t)
    };
    json!({
        "model": params.model,
        "prompt": prompt,
        "temperature": temperature,
        "max_tokens": params.max_tokens,
    })
}

pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    calls: AtomicUsize,
}

impl HttpBackend {
    pub fn new(
        endpoint: &str,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            endpoint: endpoint.to_string(),
            api_key: api_key.filter(|k| !k.is_empty()),
            client,
            calls: AtomicUsize::new(0),
        })
    }

    /// Reads the key from `LLM_API_KEY`.
    pub fn from_env(endpoint: &str, timeout: Duration) -> Result<Self, BackendError> {
        Self::new(endpoint, std::env::var(API_KEY_VAR).ok(), timeout)
    }

    pub fn has_key(&self) -> bool {
        self.api_key.is_some()
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let key = self.api_key.as_deref().ok_or(BackendError::MissingApiKey)?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(key)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(wire_payload(prompt, params).to_string())
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .text()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if status.as_u16() == 429 {
            return Err(BackendError::RateLimited {
                body: excerpt(&body),
            });
        }
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: excerpt(&body),
            });
        }
        let v: Value = serde_json::from_str(&body)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        v.pointer("/choices/0/text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::MalformedResponse("no `choices[0].text`".into()))
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// What the mock answers when the request digest is not in its table.
#[derive(Debug, Clone)]
pub enum MockFallback {
    /// Labels whose keywords occur in the delimited tweet, else `none`.
    Keywords(PromptAssets),
    /// The same completion for every request.
    Fixed(String),
    /// A miss is an error.
    Fail,
}

pub struct MockBackend {
    table: HashMap<String, String>,
    fallback: MockFallback,
    calls: AtomicUsize,
}

/// Escapes `\`, tab and newline for one-line table cells.
pub fn escape_cell(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
        .replace('\r', "\\r")
}

pub fn unescape_cell(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            Option::None => out.push('\\'),
        }
    }
    out
}

impl MockBackend {
    pub fn new(table: HashMap<String, String>, fallback: MockFallback) -> Self {
        MockBackend {
            table,
            fallback,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn fixed(completion: &str) -> Self {
        Self::new(HashMap::new(), MockFallback::Fixed(completion.to_string()))
    }

    /// Reads `digest<TAB>completion` lines; completions use `\n`-style escapes.
    pub fn parse_table(text: &str) -> Result<HashMap<String, String>, BackendError> {
        let mut table = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (digest, completion) = line.split_once('\t').ok_or_else(|| {
                BackendError::MalformedResponse(format!("mock table line {}: no tab", i + 1))
            })?;
            table.insert(digest.to_string(), unescape_cell(completion));
        }
        Ok(table)
    }

    pub fn load_table(path: &Path) -> Result<HashMap<String, String>, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Transport(format!("{}: {e}", path.display())))?;
        Self::parse_table(&text)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Labels whose keywords appear as whole-word phrases in `text`.
pub fn keyword_labels(text: &str, assets: &PromptAssets) -> Vec<(ConcernLabel, String)> {
    let hay = format!(
        " {} ",
        text.to_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
    );
    let mut hits = Vec::new();
    for l in ConcernLabel::ALL {
        if let Some(k) = assets
            .keywords(l)
            .iter()
            .find(|k| hay.contains(&format!(" {} ", k.to_lowercase())))
        {
            hits.push((l, k.clone()));
        }
    }
    hits
}

/// The completion the keyword rule produces for a tweet.
pub fn keyword_completion(tweet: &str, assets: &PromptAssets) -> String {
    let hits = keyword_labels(tweet, assets);
    if hits.is_empty() {
        return render_response(
            LabelSet::single(ConcernLabel::None),
            "No concern keyword appears in the tweet.",
        );
    }
    let labels: LabelSet = hits.iter().map(|(l, _)| *l).collect();
    let why: Vec<String> = hits
        .iter()
        .map(|(l, k)| format!("'{k}' indicates {l}"))
        .collect();
    render_response(labels, &format!("{}.", why.join("; ")))
}

impl Backend for MockBackend {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let digest = request_digest(prompt, params);
        if let Some(c) = self.table.get(&digest) {
            return Ok(c.clone());
        }
        match &self.fallback {
            MockFallback::Fixed(c) => Ok(c.clone()),
            MockFallback::Keywords(assets) => Ok(keyword_completion(
                extract_tweet(prompt).unwrap_or(""),
                assets,
            )),
            MockFallback::Fail => Err(BackendError::MockMiss(digest)),
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn serve_once(status: &str, body: &str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
        let response = format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let mut stream = stream;
            stream.write_all(response.as_bytes()).unwrap();
            head + &String::from_utf8(body).unwrap()
        });
        (url, handle)
    }

    fn http(url: &str) -> HttpBackend {
        HttpBackend::new(url, Some("sk-test".into()), Duration::from_secs(5)).unwrap()
    }

    #[test]
    fn payload_shape() {
        let v = wire_payload("hi", &LlmParams::default());
        assert_eq!(
            v.to_string(),
            r#"{"max_tokens":100,"model":"text-davinci-003","prompt":"hi","temperature":0}"#
        );
        let p = LlmParams {
            temperature: 0.7,
            ..Default::default()
        };
        assert_eq!(wire_payload("hi", &p)["temperature"], json!(0.7));
    }

    #[test]
    fn http_success_sends_bearer_and_payload() {
        let (url, server) = serve_once("200 OK", r#"{"choices":[{"text":"Concern: ['pharma']"}]}"#);
        let b = http(&url);
        let out = b.complete("prompt text", &LlmParams::default()).unwrap();
        assert_eq!(out, "Concern: ['pharma']");
        assert_eq!(b.calls(), 1);
        let request = server.join().unwrap();
        assert!(request.starts_with("POST /v1/completions"));
        assert!(request
            .to_ascii_lowercase()
            .contains("authorization: bearer sk-test"));
        assert!(request.ends_with(&wire_payload("prompt text", &LlmParams::default()).to_string()));
    }

    #[test]
    fn http_status_mapping() {
        let (url, server) = serve_once("429 Too Many Requests", r#"{"error":"slow down"}"#);
        let e = http(&url).complete("p", &LlmParams::default()).unwrap_err();
        assert!(matches!(e, BackendError::RateLimited { .. }));
        server.join().unwrap();

        let (url, server) = serve_once("503 Service Unavailable", "down");
        let e = http(&url).complete("p", &LlmParams::default()).unwrap_err();
        assert_eq!(
            e,
            BackendError::Status {
                status: 503,
                body: "down".into()
            }
        );
        server.join().unwrap();

        let (url, server) = serve_once("200 OK", r#"{"id":"x"}"#);
        let e = http(&url).complete("p", &LlmParams::default()).unwrap_err();
        assert!(matches!(e, BackendError::MalformedResponse(_)));
        server.join().unwrap();
    }

    #[test]
    fn http_without_key_is_a_config_error() {
        let b =
            HttpBackend::new("http://127.0.0.1:9", Option::None, Duration::from_secs(1)).unwrap();
        let e = b.complete("p", &LlmParams::default()).unwrap_err();
        assert!(e.is_config());
        assert_eq!(b.calls(), 0);
    }

    #[test]
    fn mock_table_lookup_and_fallbacks() {
        let params = LlmParams::default();
        let stored = "Concern: ['rushed']\nReasoning: tab\there.";
        let table = format!(
            "# digest\tcompletion\n{}\t{}\n",
            request_digest("p1", &params),
            escape_cell(stored)
        );
        let mock = MockBackend::new(
            MockBackend::parse_table(&table).unwrap(),
            MockFallback::Fail,
        );
        assert_eq!(mock.complete("p1", &params).unwrap(), stored);
        assert!(matches!(
            mock.complete("p2", &params),
            Err(BackendError::MockMiss(_))
        ));
        assert_eq!(mock.calls(), 2);

        let rules = MockBackend::new(
            HashMap::new(),
            MockFallback::Keywords(PromptAssets::builtin()),
        );
        let out = rules
            .complete("Tweet: ```big pharma and the microchip```\n", &params)
            .unwrap();
        assert!(out.starts_with("Concern: ['pharma', 'conspiracy']"));
        let out = rules
            .complete("Tweet: ```lovely weather```\n", &params)
            .unwrap();
        assert!(out.starts_with("Concern: ['none']"));
    }

    #[test]
    fn escapes_round_trip() {
        for s in ["", "a\\nb", "x\ny\tz\\", "\\"] {
            assert_eq!(unescape_cell(&escape_cell(s)), s);
        }
    }
}
