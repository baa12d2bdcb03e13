//! Provider-agnostic chat completion with retries, logprob capture and
//! perplexity.

mod pool;
mod provider;
pub mod wire;

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt_builder::{Placement, RenderedRequest};

pub use pool::map_ordered;
pub use provider::{
    fixture_key, request_key, write_fixtures, EchoProvider, FixtureEntry, FixtureError, HttpProvider, Provider,
    ReplayProvider,
};
pub use wire::WireFormat;

pub const CORRECTION_TEMPERATURE: f64 = 0.0;
pub const JOKE_TEMPERATURE: f64 = 0.8;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 4096;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited")]
    RateLimited,
    #[error("provider error (status {status:?}): {body}")]
    Provider { status: Option<u16>, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl ProviderError {
    pub fn is_transient(&self) -> bool {
        match self {
            Self::RateLimited | Self::Timeout => true,
            Self::Provider { status: Some(s), .. } => *s >= 500,
            _ => false,
        }
    }

    /// Short tag stored in result rows.
    pub fn tag(&self) -> String {
        match self {
            Self::Auth(_) => "auth".into(),
            Self::RateLimited => "rate_limited".into(),
            Self::Provider { status: Some(s), .. } => format!("provider_{s}"),
            Self::Provider { status: None, .. } => "provider".into(),
            Self::Timeout => "timeout".into(),
            Self::InvalidRequest(_) => "invalid_request".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub system: Option<String>,
    pub user: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub want_logprobs: bool,
    /// Forwarded to providers that accept one; not part of the replay key.
    pub seed: Option<u64>,
}

impl ChatRequest {
    pub fn new(model_id: impl Into<String>, system: Option<String>, user: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            system,
            user: user.into(),
            temperature: CORRECTION_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            want_logprobs: false,
            seed: None,
        }
    }

    pub fn from_rendered(model_id: impl Into<String>, rendered: RenderedRequest) -> Self {
        Self::new(model_id, rendered.system, rendered.user)
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.user.is_empty() {
            return Err(ProviderError::InvalidRequest("user text is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderResponse {
    pub text: String,
    pub token_logprobs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles after each further failure.
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            backoff: Duration::from_secs(2),
        }
    }
}

impl RetryPolicy {
    fn delay_after(&self, attempt: u32) -> Duration {
        let factor = 1u32 << (attempt.saturating_sub(1)).min(16);
        self.backoff.saturating_mul(factor).min(Duration::from_secs(300))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderKind {
    Echo,
    Replay,
    Http(WireFormat),
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub name: String,
    pub kind: ProviderKind,
    pub base_url: String,
    pub auth_env_var: String,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

/// `CLOCRC_API_KEY_<NAME>`, with the name upper-cased and anything outside
/// `[A-Z0-9]` replaced by `_`.
pub fn auth_env_var_for(name: &str) -> String {
    let suffix: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("CLOCRC_API_KEY_{suffix}")
}

impl ProviderConfig {
    pub fn new(name: impl Into<String>, kind: ProviderKind, base_url: impl Into<String>) -> Self {
        let name = name.into();
        Self {
            auth_env_var: auth_env_var_for(&name),
            name,
            kind,
            base_url: base_url.into(),
            max_concurrency: 4,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(300),
        }
    }

    /// `echo`, `replay`, `openai` and `anthropic`.
    pub fn builtin(name: &str) -> Option<Self> {
        Some(match name {
            "echo" => Self::new("echo", ProviderKind::Echo, ""),
            "replay" => Self::new("replay", ProviderKind::Replay, ""),
            "openai" => Self::new("openai", ProviderKind::Http(WireFormat::OpenAiChat), "https://api.openai.com/v1"),
            "anthropic" => Self::new(
                "anthropic",
                ProviderKind::Http(WireFormat::AnthropicMessages),
                "https://api.anthropic.com/v1",
            ),
            _ => return None,
        })
    }

    pub fn is_live(&self) -> bool {
        matches!(self.kind, ProviderKind::Http(_))
    }

    /// Builds an HTTP provider, reading the key from `auth_env_var`.
    pub fn connect_http(&self) -> Result<HttpProvider, ProviderError> {
        let ProviderKind::Http(wire) = self.kind else {
            return Err(ProviderError::InvalidRequest(format!("provider `{}` is not an HTTP provider", self.name)));
        };
        if self.max_concurrency == 0 {
            return Err(ProviderError::InvalidRequest("max_concurrency must be at least 1".into()));
        }
        let api_key = std::env::var(&self.auth_env_var)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ProviderError::Auth(format!("environment variable {} is not set", self.auth_env_var)))?;
        Ok(HttpProvider {
            wire,
            base_url: self.base_url.clone(),
            api_key,
            timeout: self.timeout,
        })
    }
}

/// Record of one model response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub doc_id: String,
    pub model_id: String,
    pub prompt_label: String,
    pub placement: Placement,
    pub corrected_text: String,
    pub token_logprobs: Option<Vec<f64>>,
    #[serde(with = "duration_ms")]
    pub latency: Duration,
    pub attempt: u32,
    pub created_at: DateTime<Utc>,
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// Identifies which plan cell a request belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordMeta {
    pub doc_id: String,
    pub prompt_label: String,
    pub placement: Placement,
}

#[derive(Debug)]
pub struct CompletionFailure {
    pub error: ProviderError,
    pub attempts: u32,
}

/// Drops a leading line that matches `pattern` (model lead-ins such as
/// "Here is the corrected text:").
#[derive(Debug, Clone)]
pub struct CommentaryFilter {
    pattern: Regex,
}

pub const DEFAULT_COMMENTARY_PATTERN: &str =
    r"(?i)^\s*(here is|here's|sure|certainly|below is|the corrected text)\b.*:\s*$";

impl CommentaryFilter {
    pub fn new(pattern: &str) -> Result<Self, regex::Error> {
        Ok(Self {
            pattern: Regex::new(pattern)?,
        })
    }

    pub fn apply(&self, text: &str) -> String {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        if self.pattern.is_match(first) {
            rest.trim_start_matches('\n').to_owned()
        } else {
            text.to_owned()
        }
    }
}

impl Default for CommentaryFilter {
    fn default() -> Self {
        Self::new(DEFAULT_COMMENTARY_PATTERN).expect("default pattern compiles")
    }
}

/// A provider plus its retry policy and a provider-wide pause that every
/// worker honours after a rate-limit response.
pub struct Client {
    provider: Arc<dyn Provider>,
    config: ProviderConfig,
    commentary: Option<CommentaryFilter>,
    paused_until: Mutex<Option<Instant>>,
}

impl Client {
    pub fn new(provider: Arc<dyn Provider>, config: ProviderConfig) -> Self {
        Self {
            provider,
            config,
            commentary: None,
            paused_until: Mutex::new(None),
        }
    }

    pub fn with_commentary_filter(mut self, filter: Option<CommentaryFilter>) -> Self {
        self.commentary = filter;
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn wait_for_pause(&self) {
        loop {
            let until = *self.paused_until.lock().expect("pause lock");
            match until {
                Some(t) if t > Instant::now() => std::thread::sleep(t - Instant::now()),
                _ => return,
            }
        }
    }

    fn pause_for(&self, delay: Duration) {
        let mut guard = self.paused_until.lock().expect("pause lock");
        let until = Instant::now() + delay;
        if guard.is_none_or(|t| t < until) {
            *guard = Some(until);
        }
    }

    /// Sends `request`, retrying transient failures with exponential
    /// backoff. The response text is kept verbatim apart from trailing
    /// newlines.
    pub fn complete(&self, request: &ChatRequest, meta: RecordMeta) -> Result<CorrectionRecord, CompletionFailure> {
        request
            .validate()
            .map_err(|error| CompletionFailure { error, attempts: 0 })?;
        let max_attempts = self.config.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.wait_for_pause();
            let started = Instant::now();
            match self.provider.send(request) {
                Ok(resp) => {
                    let mut text = resp.text.trim_end_matches(['\n', '\r']).to_owned();
                    if let Some(filter) = &self.commentary {
                        text = filter.apply(&text);
                    }
                    return Ok(CorrectionRecord {
                        doc_id: meta.doc_id,
                        model_id: request.model_id.clone(),
                        prompt_label: meta.prompt_label,
                        placement: meta.placement,
                        corrected_text: text,
                        token_logprobs: resp.token_logprobs,
                        latency: started.elapsed(),
                        attempt,
                        created_at: Utc::now(),
                    });
                }
                Err(error) if error.is_transient() && attempt < max_attempts => {
                    let delay = self.config.retry.delay_after(attempt);
                    if matches!(error, ProviderError::RateLimited) {
                        self.pause_for(delay);
                    } else {
                        std::thread::sleep(delay);
                    }
                }
                Err(error) => return Err(CompletionFailure { error, attempts: attempt }),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerplexityError {
    #[error("no token log probabilities")]
    EmptyLogprobs,
    #[error("log probability {0} is positive")]
    PositiveLogprob(String),
}

/// `exp(-mean(ln p))`: 1 for a fully certain response, larger when less
/// certain.
pub fn perplexity(token_logprobs: &[f64]) -> Result<f64, PerplexityError> {
    if token_logprobs.is_empty() {
        return Err(PerplexityError::EmptyLogprobs);
    }
    if let Some(bad) = token_logprobs.iter().find(|&&lp| lp > 0.0 || lp.is_nan()) {
        return Err(PerplexityError::PositiveLogprob(bad.to_string()));
    }
    let mean = token_logprobs.iter().sum::<f64>() / token_logprobs.len() as f64;
    Ok((-mean).exp())
}
