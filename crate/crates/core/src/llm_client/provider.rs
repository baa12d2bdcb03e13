use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::wire::WireFormat;
use super::{ChatRequest, ProviderError, ProviderResponse};
use crate::http;
use crate::prompt_builder::known_prompt_texts;

/// One chat backend. Implementations make a single attempt; retries live in
/// [`super::Client`].
pub trait Provider: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<ProviderResponse, ProviderError>;
}

/// Returns the text it was asked to correct.
///
/// That is the user turn, minus a trailing `"\n\n" + prompt` when the
/// request has no system message and the suffix is a catalogue prompt.
#[derive(Debug, Clone)]
pub struct EchoProvider {
    suffixes: Vec<String>,
}

impl Default for EchoProvider {
    fn default() -> Self {
        Self {
            suffixes: known_prompt_texts().into_iter().map(|p| format!("\n\n{p}")).collect(),
        }
    }
}

impl EchoProvider {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Provider for EchoProvider {
    fn send(&self, request: &ChatRequest) -> Result<ProviderResponse, ProviderError> {
        let mut text = request.user.as_str();
        if request.system.is_none() {
            if let Some(stripped) = self.suffixes.iter().find_map(|s| text.strip_suffix(s.as_str())) {
                text = stripped;
            }
        }
        Ok(ProviderResponse {
            text: text.to_owned(),
            token_logprobs: None,
        })
    }
}

/// Stable hex SHA-256 over `(model_id, system, user, temperature)`.
pub fn fixture_key(model_id: &str, system: Option<&str>, user: &str, temperature: f64) -> String {
    let canonical = serde_json::to_string(&(model_id, system, user, temperature)).expect("tuple serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn request_key(request: &ChatRequest) -> String {
    fixture_key(
        &request.model_id,
        request.system.as_deref(),
        &request.user,
        request.temperature,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub key: String,
    pub response: String,
    #[serde(default)]
    pub token_logprobs: Option<Vec<f64>>,
}

/// Answers from a fixture table keyed by [`request_key`].
#[derive(Debug, Clone, Default)]
pub struct ReplayProvider {
    fixtures: HashMap<String, FixtureEntry>,
}

impl ReplayProvider {
    pub fn new(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        Self {
            fixtures: entries.into_iter().map(|e| (e.key.clone(), e)).collect(),
        }
    }

    /// Parses fixture JSONL. A repeated key keeps its last entry.
    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: FixtureEntry = serde_json::from_str(line).map_err(|e| FixtureError::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl Provider for ReplayProvider {
    fn send(&self, request: &ChatRequest) -> Result<ProviderResponse, ProviderError> {
        let key = request_key(request);
        let entry = self.fixtures.get(&key).ok_or_else(|| ProviderError::Provider {
            status: None,
            body: format!("no replay fixture for key {key}"),
        })?;
        Ok(ProviderResponse {
            text: entry.response.clone(),
            token_logprobs: entry.token_logprobs.clone(),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("fixture line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_fixtures(out: &mut impl Write, entries: &[FixtureEntry]) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut *out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// A live chat endpoint.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    pub wire: WireFormat,
    pub base_url: String,
    pub api_key: String,
    pub timeout: Duration,
}

impl Provider for HttpProvider {
    fn send(&self, request: &ChatRequest) -> Result<ProviderResponse, ProviderError> {
        let resp = http::post_json(
            &self.wire.endpoint(&self.base_url),
            &self.wire.headers(&self.api_key),
            &self.wire.body(request),
            self.timeout,
        )
        .map_err(|e| match e {
            http::TransportError::Timeout => ProviderError::Timeout,
            http::TransportError::Other(msg) => ProviderError::Provider {
                status: None,
                body: msg,
            },
        })?;
        classify_status(resp.status, &resp.body)?;
        self.wire.parse(&resp.body)
    }
}

pub(crate) fn classify_status(status: u16, body: &str) -> Result<(), ProviderError> {
    match status {
        200..=299 => Ok(()),
        401 | 403 => Err(ProviderError::Auth(format!("status {status}: {}", http::excerpt(body, 200)))),
        429 => Err(ProviderError::RateLimited),
        _ => Err(ProviderError::Provider {
            status: Some(status),
            body: http::excerpt(body, 200),
        }),
    }
}
