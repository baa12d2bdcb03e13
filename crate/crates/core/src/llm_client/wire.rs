//! Request bodies and response decoding for the two chat wire dialects.

use serde_json::{json, Value};

use super::{ChatRequest, ProviderError, ProviderResponse};

pub const ANTHROPIC_VERSION: &str = "2023-06-01";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireFormat {
    /// `POST {base}/chat/completions`, bearer auth.
    OpenAiChat,
    /// `POST {base}/messages`, `x-api-key` auth.
    AnthropicMessages,
}

impl WireFormat {
    pub fn endpoint(self, base_url: &str) -> String {
        let base = base_url.trim_end_matches('/');
        match self {
            Self::OpenAiChat => format!("{base}/chat/completions"),
            Self::AnthropicMessages => format!("{base}/messages"),
        }
    }

    pub fn headers(self, api_key: &str) -> Vec<(&'static str, String)> {
        match self {
            Self::OpenAiChat => vec![("authorization", format!("Bearer {api_key}"))],
            Self::AnthropicMessages => vec![
                ("x-api-key", api_key.to_owned()),
                ("anthropic-version", ANTHROPIC_VERSION.to_owned()),
            ],
        }
    }

    pub fn body(self, req: &ChatRequest) -> Value {
        match self {
            Self::OpenAiChat => openai_body(req),
            Self::AnthropicMessages => anthropic_body(req),
        }
    }

    pub fn parse(self, body: &str) -> Result<ProviderResponse, ProviderError> {
        match self {
            Self::OpenAiChat => parse_openai(body),
            Self::AnthropicMessages => parse_anthropic(body),
        }
    }
}

pub fn openai_body(req: &ChatRequest) -> Value {
    let mut messages = Vec::with_capacity(2);
    if let Some(system) = &req.system {
        messages.push(json!({"role": "system", "content": system}));
    }
    messages.push(json!({"role": "user", "content": req.user}));
    let mut body = json!({
        "model": req.model_id,
        "messages": messages,
        "temperature": req.temperature,
        "max_tokens": req.max_output_tokens,
    });
    if req.want_logprobs {
        body["logprobs"] = Value::Bool(true);
    }
    if let Some(seed) = req.seed {
        body["seed"] = json!(seed);
    }
    body
}

pub fn anthropic_body(req: &ChatRequest) -> Value {
    let mut body = json!({
        "model": req.model_id,
        "max_tokens": req.max_output_tokens,
        "temperature": req.temperature,
        "messages": [{"role": "user", "content": req.user}],
    });
    if let Some(system) = &req.system {
        body["system"] = Value::String(system.clone());
    }
    body
}

fn malformed(msg: impl Into<String>) -> ProviderError {
    ProviderError::Provider {
        status: None,
        body: format!("malformed response: {}", msg.into()),
    }
}

pub fn parse_openai(body: &str) -> Result<ProviderResponse, ProviderError> {
    let v: Value = serde_json::from_str(body).map_err(|e| malformed(e.to_string()))?;
    let choice = v
        .get("choices")
        .and_then(Value::as_array)
        .and_then(|c| c.first())
        .ok_or_else(|| malformed("no choices"))?;
    let text = match choice.pointer("/message/content") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) => String::new(),
        _ => return Err(malformed("choice has no message content")),
    };
    let token_logprobs = match choice.pointer("/logprobs/content") {
        Some(Value::Array(tokens)) => Some(
            tokens
                .iter()
                .map(|t| {
                    t.get("logprob")
                        .and_then(Value::as_f64)
                        .ok_or_else(|| malformed("token without numeric logprob"))
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        _ => None,
    };
    Ok(ProviderResponse { text, token_logprobs })
}

pub fn parse_anthropic(body: &str) -> Result<ProviderResponse, ProviderError> {
    let v: Value = serde_json::from_str(body).map_err(|e| malformed(e.to_string()))?;
    let blocks = v
        .get("content")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("no content array"))?;
    let text = blocks
        .iter()
        .find(|b| b.get("type").and_then(Value::as_str) == Some("text"))
        .and_then(|b| b.get("text"))
        .and_then(Value::as_str)
        .map(str::to_owned)
        .unwrap_or_default();
    Ok(ProviderResponse {
        text,
        token_logprobs: None,
    })
}
