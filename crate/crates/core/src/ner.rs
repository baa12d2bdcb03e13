//! Named-entity extraction backends.
//!
//! The tagger itself lives outside this crate. Two backends are provided: a
//! JSON-over-HTTP client for any external tagger and a deterministic
//! gazetteer for tests and offline runs.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity_metrics::{EntityMention, EntityType};
use crate::http;

#[derive(Debug, Error)]
pub enum NerError {
    #[error("NER backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed NER response: {0}")]
    MalformedResponse(String),
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("cannot read lexicon: {0}")]
    Io(#[from] std::io::Error),
}

/// Surface-to-type lexicon matched on word boundaries, longest entry first.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    by_first_char: HashMap<char, Vec<(Vec<char>, EntityType)>>,
}

impl Gazetteer {
    pub fn new<S, T>(entries: impl IntoIterator<Item = (S, T)>) -> Self
    where
        S: AsRef<str>,
        T: Into<EntityType>,
    {
        let mut g = Self::default();
        for (surface, etype) in entries {
            g.insert(surface.as_ref(), etype.into());
        }
        g
    }

    fn insert(&mut self, surface: &str, etype: EntityType) {
        let chars: Vec<char> = surface.chars().collect();
        let Some(&first) = chars.first() else { return };
        let bucket = self.by_first_char.entry(first).or_default();
        if let Some(existing) = bucket.iter_mut().find(|(s, _)| *s == chars) {
            existing.1 = etype;
        } else {
            bucket.push((chars, etype));
            bucket.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
    }

    /// Parses a lexicon: one `surface<TAB>type` entry per line. Blank lines
    /// are skipped. A repeated surface takes the type of its last entry.
    pub fn parse(text: &str) -> Result<Self, NerError> {
        let mut g = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() {
                continue;
            }
            let lexicon_err = |message: &str| NerError::Lexicon {
                line: idx + 1,
                message: message.to_owned(),
            };
            let (surface, etype) = line
                .split_once('\t')
                .ok_or_else(|| lexicon_err("expected `surface<TAB>type`"))?;
            if surface.is_empty() {
                return Err(lexicon_err("empty surface"));
            }
            if etype.trim().is_empty() {
                return Err(lexicon_err("empty entity type"));
            }
            g.insert(surface, EntityType::from(etype));
        }
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self, NerError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        self.by_first_char.is_empty()
    }

    pub fn extract(&self, text: &str) -> Vec<EntityMention> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let at_boundary = i == 0 || !chars[i - 1].is_alphanumeric();
            let hit = at_boundary
                .then(|| self.by_first_char.get(&chars[i]))
                .flatten()
                .and_then(|bucket| {
                    bucket.iter().find(|(surface, _)| {
                        let end = i + surface.len();
                        end <= chars.len()
                            && chars[i..end] == surface[..]
                            && chars.get(end).is_none_or(|c| !c.is_alphanumeric())
                    })
                });
            match hit {
                Some((surface, etype)) => {
                    out.push(EntityMention {
                        surface: surface.iter().collect(),
                        etype: etype.clone(),
                        start: i,
                    });
                    i += surface.len();
                }
                None => i += 1,
            }
        }
        out
    }
}

/// Client for an external tagger speaking
/// `{"text": ...}` → `{"mentions": [{"surface", "type", "start"}]}`.
#[derive(Debug, Clone)]
pub struct HttpNer {
    pub endpoint: String,
    pub timeout: Duration,
}

#[derive(Serialize)]
struct NerRequest<'a> {
    text: &'a str,
}

#[derive(Debug, Deserialize)]
pub struct NerResponse {
    pub mentions: Vec<EntityMention>,
}

impl HttpNer {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout,
        }
    }

    pub fn extract(&self, text: &str) -> Result<Vec<EntityMention>, NerError> {
        let body = serde_json::to_value(NerRequest { text }).expect("request serializes");
        let resp = http::post_json(&self.endpoint, &[], &body, self.timeout)
            .map_err(|e| NerError::BackendUnavailable(e.to_string()))?;
        if resp.status >= 500 {
            return Err(NerError::BackendUnavailable(format!(
                "status {}: {}",
                resp.status,
                http::excerpt(&resp.body, 200)
            )));
        }
        if !(200..300).contains(&resp.status) {
            return Err(NerError::MalformedResponse(format!(
                "status {}: {}",
                resp.status,
                http::excerpt(&resp.body, 200)
            )));
        }
        parse_ner_response(&resp.body, text)
    }
}

/// Decodes a tagger response and checks every mention against `text`.
/// Out-of-range offsets are rejected.
pub fn parse_ner_response(body: &str, text: &str) -> Result<Vec<EntityMention>, NerError> {
    let parsed: NerResponse =
        serde_json::from_str(body).map_err(|e| NerError::MalformedResponse(e.to_string()))?;
    let len = text.chars().count();
    for m in &parsed.mentions {
        if m.surface.is_empty() {
            return Err(NerError::MalformedResponse("empty surface".into()));
        }
        let end = m.start.checked_add(m.surface.chars().count());
        if end.is_none_or(|end| end > len) {
            return Err(NerError::MalformedResponse(format!(
                "mention `{}` at {} exceeds text length {len}",
                m.surface, m.start
            )));
        }
    }
    let mut mentions = parsed.mentions;
    sort_mentions(&mut mentions);
    Ok(mentions)
}

fn sort_mentions(mentions: &mut [EntityMention]) {
    mentions.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.surface.cmp(&b.surface)));
}

#[derive(Debug, Clone)]
pub enum NerBackend {
    Gazetteer(Gazetteer),
    Http(HttpNer),
}

/// Mentions in `text`, sorted by start offset. Offsets index `text` exactly
/// as passed.
pub fn extract_entities(text: &str, backend: &NerBackend) -> Result<Vec<EntityMention>, NerError> {
    match backend {
        NerBackend::Gazetteer(g) => {
            let mut mentions = g.extract(text);
            sort_mentions(&mut mentions);
            Ok(mentions)
        }
        NerBackend::Http(client) => client.extract(text),
    }
}
