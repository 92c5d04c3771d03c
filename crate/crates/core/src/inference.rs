//! Pluggable model backends and the batch runner that drives them with
//! bounded concurrency, a request-rate cap, and retry with exponential
//! backoff.
//!
//! Callers submit an ordered batch of `(sample_id, prompt)` pairs and get an
//! ordered batch of outcomes back, regardless of completion order. A sample
//! whose retries are exhausted (or that fails permanently) is recorded as a
//! sentinel empty output (which downstream maps to Neutral) and counted
//! against the abort threshold; the whole run errors only on invalid
//! configuration or when the failure ratio reaches that threshold.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::io::AsyncWriteExt;

use crate::error::{Error, Result};
use crate::labelmap;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    HttpChat,
    ExternalCommand,
    Replay,
    LexiconMock,
}

impl BackendKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BackendKind::HttpChat => "http-chat",
            BackendKind::ExternalCommand => "external-command",
            BackendKind::Replay => "replay",
            BackendKind::LexiconMock => "lexicon-mock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_backoff_ms: 250,
            jitter: true,
        }
    }
}

fn default_temperature() -> f64 {
    0.0
}
fn default_max_output_tokens() -> u32 {
    16
}
fn default_max_concurrency() -> usize {
    4
}
fn default_abort_ratio() -> f64 {
    0.05
}
fn default_timeout_ms() -> u64 {
    30_000
}

/// Backend configuration; which fields are required depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Base URL for http-chat backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Request path appended to the endpoint.
    #[serde(default = "default_chat_path")]
    pub chat_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_max_concurrency")]
    pub max_concurrency: usize,
    /// Aggregate request starts per second; unset means uncapped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_second_cap: Option<f64>,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Predictions JSONL for replay backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_path: Option<PathBuf>,
    /// Program and arguments for external-command backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Vec<String>>,
    /// Abort the run when failed/total reaches this ratio.
    #[serde(default = "default_abort_ratio")]
    pub abort_failure_ratio: f64,
    /// Optional resumable results cache (JSONL).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    #[serde(default = "default_timeout_ms")]
    pub request_timeout_ms: u64,
}

fn default_chat_path() -> String {
    "/v1/chat/completions".to_string()
}

impl BackendConfig {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            endpoint: None,
            chat_path: default_chat_path(),
            model_name: None,
            temperature: default_temperature(),
            max_output_tokens: default_max_output_tokens(),
            max_concurrency: default_max_concurrency(),
            requests_per_second_cap: None,
            retry: RetryPolicy::default(),
            api_key_env: None,
            replay_path: None,
            command: None,
            abort_failure_ratio: default_abort_ratio(),
            cache_path: None,
            request_timeout_ms: default_timeout_ms(),
        }
    }

    /// Identifier used in reports and cache keys.
    pub fn backend_id(&self) -> String {
        self.model_name
            .clone()
            .unwrap_or_else(|| self.kind.as_str().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_concurrency < 1 {
            return Err(Error::InvalidConfig(
                "max_concurrency must be at least 1".to_string(),
            ));
        }
        if self.temperature < 0.0 {
            return Err(Error::InvalidConfig(
                "temperature must be non-negative".to_string(),
            ));
        }
        if self.retry.max_attempts < 1 {
            return Err(Error::InvalidConfig(
                "retry.max_attempts must be at least 1".to_string(),
            ));
        }
        if !(self.abort_failure_ratio > 0.0 && self.abort_failure_ratio <= 1.0) {
            return Err(Error::InvalidConfig(
                "abort_failure_ratio must be in (0, 1]".to_string(),
            ));
        }
        if let Some(cap) = self.requests_per_second_cap {
            if !cap.is_finite() || cap <= 0.0 {
                return Err(Error::InvalidConfig(
                    "requests_per_second_cap must be positive".to_string(),
                ));
            }
        }
        match self.kind {
            BackendKind::HttpChat => {
                if self.endpoint.is_none() {
                    return Err(Error::InvalidConfig(
                        "http-chat backend requires 'endpoint'".to_string(),
                    ));
                }
                if self.api_key_env.is_none() {
                    return Err(Error::InvalidConfig(
                        "http-chat backend requires 'api_key_env'".to_string(),
                    ));
                }
            }
            BackendKind::Replay => {
                if self.replay_path.is_none() {
                    return Err(Error::InvalidConfig(
                        "replay backend requires 'replay_path'".to_string(),
                    ));
                }
            }
            BackendKind::ExternalCommand => {
                if self.command.as_ref().is_none_or(|c| c.is_empty()) {
                    return Err(Error::InvalidConfig(
                        "external-command backend requires a non-empty 'command'".to_string(),
                    ));
                }
            }
            BackendKind::LexiconMock => {}
        }
        Ok(())
    }
}

/// Failure from a single backend request. Transient failures are retried.
#[derive(Debug, Clone)]
pub struct BackendError {
    pub transient: bool,
    pub message: String,
}

impl BackendError {
    fn transient(message: impl Into<String>) -> Self {
        Self {
            transient: true,
            message: message.into(),
        }
    }

    fn permanent(message: impl Into<String>) -> Self {
        Self {
            transient: false,
            message: message.into(),
        }
    }
}

#[async_trait]
pub trait Backend: Send + Sync {
    async fn generate(
        &self,
        sample_id: &str,
        prompt: &str,
    ) -> std::result::Result<String, BackendError>;
}

/// Chat-completion HTTP backend: sends
/// `{model, messages:[{role:"user",content}], temperature, max_tokens}`
/// with bearer authentication and returns the first choice's message content.
pub struct HttpChatBackend {
    client: reqwest::Client,
    url: String,
    api_key: String,
    model: String,
    temperature: f64,
    max_tokens: u32,
}

impl HttpChatBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self> {
        let endpoint = cfg
            .endpoint
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("http-chat backend requires 'endpoint'".into()))?;
        let env_name = cfg.api_key_env.as_ref().ok_or_else(|| {
            Error::InvalidConfig("http-chat backend requires 'api_key_env'".into())
        })?;
        let api_key = std::env::var(env_name).map_err(|_| {
            Error::InvalidConfig(format!("environment variable '{env_name}' is not set"))
        })?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(cfg.request_timeout_ms))
            .build()
            .map_err(|e| Error::Backend(e.to_string()))?;
        let url = format!(
            "{}{}",
            endpoint.trim_end_matches('/'),
            cfg.chat_path.as_str()
        );
        Ok(Self {
            client,
            url,
            api_key,
            model: cfg.backend_id(),
            temperature: cfg.temperature,
            max_tokens: cfg.max_output_tokens,
        })
    }

    /// One chat-completion request, no retries.
    pub async fn request(&self, prompt: &str) -> std::result::Result<String, BackendError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        });
        let response = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| BackendError::transient(format!("request failed: {e}")))?;

        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::transient(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::permanent(format!("status {status}")));
        }
        let value: serde_json::Value = response
            .json()
            .await
            .map_err(|e| BackendError::permanent(format!("malformed response: {e}")))?;
        value
            .get("choices")
            .and_then(|c| c.get(0))
            .and_then(|c| c.get("message"))
            .and_then(|m| m.get("content"))
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| {
                BackendError::permanent("malformed response: missing choices[0].message.content")
            })
    }
}

#[async_trait]
impl Backend for HttpChatBackend {
    async fn generate(
        &self,
        _sample_id: &str,
        prompt: &str,
    ) -> std::result::Result<String, BackendError> {
        self.request(prompt).await
    }
}

/// Answers each sample id from a stored predictions file.
pub struct ReplayBackend {
    outputs: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let predictions = labelmap::load_predictions(path)?;
        Ok(Self {
            outputs: predictions
                .into_iter()
                .map(|p| (p.sample_id, p.raw_output))
                .collect(),
        })
    }
}

#[async_trait]
impl Backend for ReplayBackend {
    async fn generate(
        &self,
        sample_id: &str,
        _prompt: &str,
    ) -> std::result::Result<String, BackendError> {
        self.outputs.get(sample_id).cloned().ok_or_else(|| {
            BackendError::permanent(format!(
                "replay file has no entry for sample id '{sample_id}'"
            ))
        })
    }
}

/// Pipes the prompt to an external program's stdin and reads stdout.
pub struct CommandBackend {
    argv: Vec<String>,
}

impl CommandBackend {
    pub fn new(argv: Vec<String>) -> Result<Self> {
        if argv.is_empty() {
            return Err(Error::InvalidConfig("command must be non-empty".into()));
        }
        Ok(Self { argv })
    }
}

#[async_trait]
impl Backend for CommandBackend {
    async fn generate(
        &self,
        _sample_id: &str,
        prompt: &str,
    ) -> std::result::Result<String, BackendError> {
        let mut command = tokio::process::Command::new(&self.argv[0]);
        command
            .args(&self.argv[1..])
            .stdin(std::process::Stdio::piped())
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::piped());
        let mut child = command
            .spawn()
            .map_err(|e| BackendError::permanent(format!("spawn failed: {e}")))?;
        let mut stdin = child.stdin.take().expect("stdin piped");
        stdin
            .write_all(prompt.as_bytes())
            .await
            .map_err(|e| BackendError::permanent(format!("write to stdin failed: {e}")))?;
        drop(stdin);
        let output = child
            .wait_with_output()
            .await
            .map_err(|e| BackendError::permanent(format!("wait failed: {e}")))?;
        if !output.status.success() {
            return Err(BackendError::permanent(format!(
                "command exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        Ok(String::from_utf8_lossy(&output.stdout)
            .trim_end_matches('\n')
            .to_string())
    }
}

/// Deterministic test double. Frozen rules: the first word (scanning left to
/// right, case-insensitive) in {beat, exceed, up} answers "positive", in
/// {miss, loss, down} answers "negative"; otherwise "neutral".
pub struct LexiconMockBackend;

pub fn lexicon_mock(text: &str) -> &'static str {
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        match word.to_ascii_lowercase().as_str() {
            "beat" | "exceed" | "up" => return "positive",
            "miss" | "loss" | "down" => return "negative",
            _ => {}
        }
    }
    "neutral"
}

#[async_trait]
impl Backend for LexiconMockBackend {
    async fn generate(
        &self,
        _sample_id: &str,
        prompt: &str,
    ) -> std::result::Result<String, BackendError> {
        Ok(lexicon_mock(prompt).to_string())
    }
}

/// Construct the backend described by a validated config.
pub fn build_backend(cfg: &BackendConfig) -> Result<Arc<dyn Backend>> {
    cfg.validate()?;
    Ok(match cfg.kind {
        BackendKind::HttpChat => Arc::new(HttpChatBackend::new(cfg)?),
        BackendKind::Replay => Arc::new(ReplayBackend::from_file(
            cfg.replay_path.as_ref().expect("validated"),
        )?),
        BackendKind::ExternalCommand => Arc::new(CommandBackend::new(
            cfg.command.clone().expect("validated"),
        )?),
        BackendKind::LexiconMock => Arc::new(LexiconMockBackend),
    })
}

/// Result of one sample's generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationOutcome {
    pub sample_id: String,
    pub raw_output: String,
    pub attempt_count: u32,
    /// Failure reason when the sample fell back to the sentinel output.
    pub error: Option<String>,
}

/// Serialized cache record keyed by (backend_id, sample_id, prompt_hash).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    backend_id: String,
    sample_id: String,
    prompt_hash: String,
    raw_output: String,
}

/// Hex-encoded SHA-256, used for cache keys and report provenance.
pub fn sha256_hex(input: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(input.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn load_cache(path: &Path, backend_id: &str) -> Result<HashMap<(String, String), String>> {
    let mut cache = HashMap::new();
    let content = match std::fs::read_to_string(path) {
        Ok(content) => content,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
        Err(e) => return Err(Error::io(path, e)),
    };
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: CacheEntry = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if entry.backend_id == backend_id {
            cache.insert((entry.sample_id, entry.prompt_hash), entry.raw_output);
        }
    }
    Ok(cache)
}

struct RateLimiter {
    interval: Option<Duration>,
    next_slot: tokio::sync::Mutex<tokio::time::Instant>,
}

impl RateLimiter {
    fn new(cap: Option<f64>) -> Self {
        Self {
            interval: cap.map(|rps| Duration::from_secs_f64(1.0 / rps)),
            next_slot: tokio::sync::Mutex::new(tokio::time::Instant::now()),
        }
    }

    async fn acquire(&self) {
        let Some(interval) = self.interval else {
            return;
        };
        let wait = {
            let mut slot = self.next_slot.lock().await;
            let now = tokio::time::Instant::now();
            let at = (*slot).max(now);
            *slot = at + interval;
            at.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            tokio::time::sleep(wait).await;
        }
    }
}

/// Backoff before retry `attempt` (1-based): `base * 2^(attempt-1)`, plus a
/// deterministic jitter of up to half the base derived from the sample id.
fn backoff_delay(retry: &RetryPolicy, sample_id: &str, attempt: u32) -> Duration {
    let base = retry
        .base_backoff_ms
        .saturating_mul(1u64 << (attempt - 1).min(16));
    let jitter = if retry.jitter && retry.base_backoff_ms > 0 {
        let mut seed = 0xcbf2_9ce4_8422_2325u64;
        for b in sample_id.bytes() {
            seed = (seed ^ b as u64).wrapping_mul(0x1000_0000_01b3);
        }
        SplitMix64::new(seed.wrapping_add(attempt as u64)).next_u64()
            % (retry.base_backoff_ms / 2 + 1)
    } else {
        0
    };
    Duration::from_millis(base + jitter)
}

/// Run a prompt batch against the configured backend.
pub async fn run_backend(
    cfg: &BackendConfig,
    prompts: &[(String, String)],
) -> Result<Vec<GenerationOutcome>> {
    let backend = build_backend(cfg)?;
    run_with_backend(cfg, backend, prompts).await
}

/// Run a prompt batch against an already-built backend. Results come back
/// in input order; in-flight requests never exceed `max_concurrency`; the
/// aggregate request rate respects `requests_per_second_cap`.
pub async fn run_with_backend(
    cfg: &BackendConfig,
    backend: Arc<dyn Backend>,
    prompts: &[(String, String)],
) -> Result<Vec<GenerationOutcome>> {
    cfg.validate()?;
    let mut seen = HashSet::with_capacity(prompts.len());
    for (id, _) in prompts {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateSampleId { id: id.clone() });
        }
    }

    let backend_id = cfg.backend_id();
    let cache: HashMap<(String, String), String> = match &cfg.cache_path {
        Some(path) => load_cache(path, &backend_id)?,
        None => HashMap::new(),
    };

    let limiter = Arc::new(RateLimiter::new(cfg.requests_per_second_cap));
    let retry = cfg.retry.clone();

    let outcomes: Vec<(GenerationOutcome, bool)> =
        stream::iter(prompts.iter().map(|(sample_id, prompt)| {
            let backend = Arc::clone(&backend);
            let limiter = Arc::clone(&limiter);
            let retry = retry.clone();
            let hash = sha256_hex(prompt);
            let cached = cache.get(&(sample_id.clone(), hash)).cloned();
            async move {
                if let Some(raw_output) = cached {
                    return (
                        GenerationOutcome {
                            sample_id: sample_id.clone(),
                            raw_output,
                            attempt_count: 1,
                            error: None,
                        },
                        true,
                    );
                }
                let mut attempt = 0u32;
                loop {
                    attempt += 1;
                    limiter.acquire().await;
                    match backend.generate(sample_id, prompt).await {
                        Ok(raw_output) => {
                            return (
                                GenerationOutcome {
                                    sample_id: sample_id.clone(),
                                    raw_output,
                                    attempt_count: attempt,
                                    error: None,
                                },
                                false,
                            );
                        }
                        Err(e) if e.transient && attempt < retry.max_attempts => {
                            tokio::time::sleep(backoff_delay(&retry, sample_id, attempt)).await;
                        }
                        Err(e) => {
                            tracing::warn!(
                                sample_id = sample_id.as_str(),
                                attempts = attempt,
                                "generation failed, recording sentinel output: {}",
                                e.message
                            );
                            return (
                                GenerationOutcome {
                                    sample_id: sample_id.clone(),
                                    raw_output: String::new(),
                                    attempt_count: attempt,
                                    error: Some(e.message),
                                },
                                false,
                            );
                        }
                    }
                }
            }
        }))
        .buffered(cfg.max_concurrency)
        .collect()
        .await;

    let failed = outcomes.iter().filter(|(o, _)| o.error.is_some()).count();
    let total = outcomes.len();
    if failed > 0 && total > 0 && (failed as f64 / total as f64) >= cfg.abort_failure_ratio {
        return Err(Error::AbortThreshold {
            failed,
            total,
            threshold: cfg.abort_failure_ratio,
        });
    }

    // Persist fresh successful results for resumable reruns.
    if let Some(path) = &cfg.cache_path {
        let prompt_by_id: HashMap<&str, &str> = prompts
            .iter()
            .map(|(id, p)| (id.as_str(), p.as_str()))
            .collect();
        let fresh: Vec<&(GenerationOutcome, bool)> = outcomes
            .iter()
            .filter(|(o, from_cache)| !from_cache && o.error.is_none())
            .collect();
        if !fresh.is_empty() {
            let mut body = String::new();
            for (outcome, _) in fresh {
                let prompt = prompt_by_id[outcome.sample_id.as_str()];
                let entry = CacheEntry {
                    backend_id: backend_id.clone(),
                    sample_id: outcome.sample_id.clone(),
                    prompt_hash: sha256_hex(prompt),
                    raw_output: outcome.raw_output.clone(),
                };
                body.push_str(&serde_json::to_string(&entry).expect("entry serializes"));
                body.push('\n');
            }
            use std::io::Write as _;
            let mut file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            file.write_all(body.as_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }

    Ok(outcomes.into_iter().map(|(o, _)| o).collect())
}

/// Synchronous wrapper around [`run_backend`] for non-async callers.
pub fn run_backend_blocking(
    cfg: &BackendConfig,
    prompts: &[(String, String)],
) -> Result<Vec<GenerationOutcome>> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::Backend(format!("failed to start runtime: {e}")))?;
    runtime.block_on(run_backend(cfg, prompts))
}
