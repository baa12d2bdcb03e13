//! Sub-prompt catalogue, named compositions and request placement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unknown sub-prompt `{0}`")]
    UnknownSubPrompt(String),
    #[error("a prompt needs at least one sub-prompt")]
    EmptyParts,
    #[error("sub-prompt `{0}` appears more than once")]
    DuplicatePart(SubPromptId),
    #[error("unknown prompt label `{0}`")]
    UnknownLabel(String),
    #[error("unknown placement `{0}` (expected system-message or text-suffix)")]
    UnknownPlacement(String),
    #[error("OCR text is empty")]
    EmptyText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubPromptId {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl SubPromptId {
    pub const ALL: [SubPromptId; 6] = [Self::A, Self::B, Self::C, Self::D, Self::E, Self::F];

    pub fn name(self) -> &'static str {
        match self {
            Self::A => "Basic",
            Self::B => "Expertise",
            Self::C => "Recover",
            Self::D => "Publication Context",
            Self::E => "Text Context",
            Self::F => "Additional Instructions",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Self::A => "Please recover the text from the corrupted OCR.",
            Self::B => "You are an expert in post-OCR correction of documents.",
            Self::C => "Using the context available from the text please recover the most likely original text from the corrupted OCR.",
            Self::D => "The text is from an English newspaper in the 1800's.",
            Self::E => "The text may be an advert or article and may be missing the beginning or end.",
            Self::F => "Do not add any text, commentary, or lead in sentences beyond the recovered text. Do not add a title, or any introductions.",
        }
    }
}

impl fmt::Display for SubPromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
            Self::D => "d",
            Self::E => "e",
            Self::F => "f",
        };
        f.write_str(c)
    }
}

impl FromStr for SubPromptId {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            "c" => Ok(Self::C),
            "d" => Ok(Self::D),
            "e" => Ok(Self::E),
            "f" => Ok(Self::F),
            _ => Err(PromptError::UnknownSubPrompt(s.to_owned())),
        }
    }
}

/// Concatenates sub-prompt texts in order, separated by one space.
pub fn compose(parts: &[SubPromptId]) -> Result<String, PromptError> {
    if parts.is_empty() {
        return Err(PromptError::EmptyParts);
    }
    Ok(parts.iter().map(|p| p.text()).collect::<Vec<_>>().join(" "))
}

/// Parses ids such as `["b", "c", "f"]` and composes them.
pub fn compose_ids<S: AsRef<str>>(ids: &[S]) -> Result<String, PromptError> {
    let parts = ids
        .iter()
        .map(|s| s.as_ref().parse())
        .collect::<Result<Vec<SubPromptId>, _>>()?;
    compose(&parts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    SystemMessage,
    TextSuffix,
}

impl Placement {
    pub const ALL: [Placement; 2] = [Self::SystemMessage, Self::TextSuffix];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SystemMessage => "system_message",
            Self::TextSuffix => "text_suffix",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Placement {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").as_str() {
            "system_message" | "system" => Ok(Self::SystemMessage),
            "text_suffix" | "suffix" => Ok(Self::TextSuffix),
            _ => Err(PromptError::UnknownPlacement(s.to_owned())),
        }
    }
}

/// A named composition from the catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CombinedPrompt {
    /// Stable CLI identifier.
    pub label: &'static str,
    pub display: &'static str,
    pub aliases: &'static [&'static str],
    pub parts: &'static [SubPromptId],
}

use SubPromptId::{A, B, C, D, E, F};

pub const COMBINED_PROMPTS: [CombinedPrompt; 8] = [
    CombinedPrompt { label: "basic-prompt", display: "basic prompt", aliases: &["basic"], parts: &[A] },
    CombinedPrompt { label: "expert-basic", display: "expert basic", aliases: &[], parts: &[B, A] },
    CombinedPrompt { label: "expert-recover", display: "expert recover", aliases: &[], parts: &[B, C] },
    CombinedPrompt {
        label: "expert-recover-publication",
        display: "expert recover publication",
        aliases: &[],
        parts: &[B, C, D],
    },
    CombinedPrompt {
        label: "expert-recover-text-prompt",
        display: "expert recover text prompt",
        aliases: &[],
        parts: &[B, C, E],
    },
    CombinedPrompt {
        label: "expert-recover-publication-text",
        display: "expert recover publication text",
        aliases: &["expert-recover-pub-instructions"],
        parts: &[B, C, D, E],
    },
    CombinedPrompt {
        label: "expert-recover-instructions",
        display: "expert recover instructions",
        aliases: &[],
        parts: &[B, C, F],
    },
    CombinedPrompt {
        label: "full-context",
        display: "full context",
        aliases: &["full"],
        parts: &[B, C, D, E, F],
    },
];

fn label_key(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '_' { '-' } else { c })
        .collect()
}

/// Looks a composition up by label, display name or alias. Spaces,
/// underscores and hyphens are interchangeable.
pub fn lookup(label: &str) -> Result<&'static CombinedPrompt, PromptError> {
    let key = label_key(label);
    COMBINED_PROMPTS
        .iter()
        .find(|p| {
            p.label == key
                || label_key(p.display) == key
                || p.aliases.iter().any(|a| *a == key)
        })
        .ok_or_else(|| PromptError::UnknownLabel(label.to_owned()))
}

impl CombinedPrompt {
    pub fn text(&self) -> String {
        compose(self.parts).expect("catalogue entries are non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub label: String,
    pub parts: Vec<SubPromptId>,
    pub placement: Placement,
}

impl PromptSpec {
    pub fn new(label: impl Into<String>, parts: Vec<SubPromptId>, placement: Placement) -> Result<Self, PromptError> {
        if parts.is_empty() {
            return Err(PromptError::EmptyParts);
        }
        for (i, p) in parts.iter().enumerate() {
            if parts[..i].contains(p) {
                return Err(PromptError::DuplicatePart(*p));
            }
        }
        Ok(Self {
            label: label.into(),
            parts,
            placement,
        })
    }

    pub fn from_label(label: &str, placement: Placement) -> Result<Self, PromptError> {
        let combined = lookup(label)?;
        Self::new(combined.label, combined.parts.to_vec(), placement)
    }

    pub fn prompt_text(&self) -> Result<String, PromptError> {
        compose(&self.parts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedRequest {
    pub system: Option<String>,
    pub user: String,
}

/// Places `prompt` relative to `ocr_text`. Suffix placement yields
/// `ocr_text + "\n\n" + prompt`; system placement sends the prompt as the
/// system message and the OCR text untouched as the user turn.
pub fn render_text(ocr_text: &str, prompt: &str, placement: Placement) -> Result<RenderedRequest, PromptError> {
    if ocr_text.is_empty() {
        return Err(PromptError::EmptyText);
    }
    Ok(match placement {
        Placement::TextSuffix => RenderedRequest {
            system: None,
            user: format!("{ocr_text}\n\n{prompt}"),
        },
        Placement::SystemMessage => RenderedRequest {
            system: Some(prompt.to_owned()),
            user: ocr_text.to_owned(),
        },
    })
}

pub fn render(ocr_text: &str, spec: &PromptSpec) -> Result<RenderedRequest, PromptError> {
    render_text(ocr_text, &spec.prompt_text()?, spec.placement)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentPrompt {
    JokeBasic,
    JokeSocio,
    JokeMislead,
    ChunkBasic,
    ChunkSocio,
    ChunkMislead,
}

const JOKE_BASIC: &str = "Please correct the below sentences containing OCR errors";
const SMH_CONTEXT: &str = "The text is from The Sydney Morning Herald 1842 -1950.";
const MISLEADING_CONTEXT: &str = "The text is from The Hong Kong Restaurant Review 1989-1993.";

impl ExperimentPrompt {
    pub const ALL: [ExperimentPrompt; 6] = [
        Self::JokeBasic,
        Self::JokeSocio,
        Self::JokeMislead,
        Self::ChunkBasic,
        Self::ChunkSocio,
        Self::ChunkMislead,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::JokeBasic => "joke_basic",
            Self::JokeSocio => "joke_socio",
            Self::JokeMislead => "joke_mislead",
            Self::ChunkBasic => "chunk_basic",
            Self::ChunkSocio => "chunk_socio",
            Self::ChunkMislead => "chunk_mislead",
        }
    }
}

pub fn experiment_prompts(kind: ExperimentPrompt) -> String {
    let chunk_basic = || lookup("expert-recover-instructions").expect("catalogue entry").text();
    match kind {
        ExperimentPrompt::JokeBasic => JOKE_BASIC.to_owned(),
        ExperimentPrompt::JokeSocio => format!("{JOKE_BASIC}, the sentences are part of popular jokes"),
        ExperimentPrompt::JokeMislead => format!("{JOKE_BASIC}, the sentences are part of an article on cookery"),
        ExperimentPrompt::ChunkBasic => chunk_basic(),
        ExperimentPrompt::ChunkSocio => format!("{} {SMH_CONTEXT}", chunk_basic()),
        ExperimentPrompt::ChunkMislead => format!("{} {MISLEADING_CONTEXT}", chunk_basic()),
    }
}

/// Every prompt string the catalogue can produce, longest first.
pub fn known_prompt_texts() -> Vec<String> {
    let mut texts: Vec<String> = COMBINED_PROMPTS
        .iter()
        .map(CombinedPrompt::text)
        .chain(SubPromptId::ALL.iter().map(|id| id.text().to_owned()))
        .chain(ExperimentPrompt::ALL.iter().map(|&k| experiment_prompts(k)))
        .collect();
    texts.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    texts.dedup();
    texts
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogueExport {
    pub sub_prompts: Vec<SubPromptEntry>,
    pub combined_prompts: Vec<CombinedEntry>,
    pub experiment_prompts: Vec<ExperimentEntry>,
    pub suffix_separator: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubPromptEntry {
    pub id: SubPromptId,
    pub name: &'static str,
    pub text: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct CombinedEntry {
    pub label: &'static str,
    pub display: &'static str,
    pub aliases: &'static [&'static str],
    pub parts: Vec<SubPromptId>,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentEntry {
    pub kind: &'static str,
    pub text: String,
}

pub fn catalogue() -> CatalogueExport {
    CatalogueExport {
        sub_prompts: SubPromptId::ALL
            .iter()
            .map(|&id| SubPromptEntry {
                id,
                name: id.name(),
                text: id.text(),
            })
            .collect(),
        combined_prompts: COMBINED_PROMPTS
            .iter()
            .map(|p| CombinedEntry {
                label: p.label,
                display: p.display,
                aliases: p.aliases,
                parts: p.parts.to_vec(),
                text: p.text(),
            })
            .collect(),
        experiment_prompts: ExperimentPrompt::ALL
            .iter()
            .map(|&k| ExperimentEntry {
                kind: k.as_str(),
                text: experiment_prompts(k),
            })
            .collect(),
        suffix_separator: "\n\n",
    }
}

/// Pretty JSON of the whole catalogue, newline-terminated.
pub fn catalogue_json() -> String {
    let mut s = serde_json::to_string_pretty(&catalogue()).expect("catalogue serializes");
    s.push('\n');
    s
}
