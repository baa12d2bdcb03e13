//! OCR / ground-truth article corpora: JSONL ingestion, sampling filters and
//! line chunking.

mod import;
mod quality;

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use import::{import_dir, import_overproof, parse_overproof, OVERPROOF_HEADER, OVERPROOF_SEPARATOR};
pub use quality::{
    filter_articles, filter_pages, load_pages, parse_pages, quality_stats, Page, PageFilter, QualityStats,
    SymbolSet, DEFAULT_MIN_ARTICLE_TOKENS, DEFAULT_MIN_PAGE_TOKENS, DEFAULT_DROP_TOP_RATIO,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: record `{id}`: {message}")]
    LineMisalignment { line: usize, id: String, message: String },
    #[error("text has no tokens")]
    EmptyText,
    #[error("document `{id}` has {have} aligned lines, {need} needed")]
    TooFewLines { id: String, have: usize, need: usize },
    #[error("document `{0}` has no line alignment")]
    NoLines(String),
    #[error("block size {0} is not one of 2, 5, 10, 15, 30, 60")]
    InvalidBlockSize(usize),
    #[error("{0}")]
    Import(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Dataset {
    Ncse,
    Smh,
    Ca,
    Custom(String),
}

impl From<String> for Dataset {
    fn from(s: String) -> Self {
        match s.as_str() {
            "NCSE" | "ncse" => Self::Ncse,
            "SMH" | "smh" => Self::Smh,
            "CA" | "ca" => Self::Ca,
            _ => Self::Custom(s),
        }
    }
}

impl From<&str> for Dataset {
    fn from(s: &str) -> Self {
        Self::from(s.to_owned())
    }
}

impl From<Dataset> for String {
    fn from(d: Dataset) -> Self {
        d.to_string()
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ncse => f.write_str("NCSE"),
            Self::Smh => f.write_str("SMH"),
            Self::Ca => f.write_str("CA"),
            Self::Custom(name) => f.write_str(name),
        }
    }
}

/// One article: raw OCR, its transcription and optional line alignment.
///
/// When `lines` is present, joining each side with `\n` reproduces
/// `ocr_text` and `gt_text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocumentPair {
    pub id: String,
    pub dataset: Dataset,
    pub periodical: Option<String>,
    pub ocr_text: String,
    pub gt_text: String,
    pub lines: Option<Vec<(String, String)>>,
}

#[derive(Deserialize)]
struct RawDocument {
    id: String,
    dataset: String,
    #[serde(default)]
    periodical: Option<String>,
    ocr_text: String,
    gt_text: String,
    #[serde(default)]
    lines: Option<Vec<Vec<String>>>,
}

impl DocumentPair {
    /// Builds a document whose texts are the newline joins of `lines`.
    pub fn from_lines(
        id: impl Into<String>,
        dataset: Dataset,
        periodical: Option<String>,
        lines: Vec<(String, String)>,
    ) -> Self {
        let ocr_text = join_side(&lines, |l| &l.0);
        let gt_text = join_side(&lines, |l| &l.1);
        Self {
            id: id.into(),
            dataset,
            periodical,
            ocr_text,
            gt_text,
            lines: Some(lines),
        }
    }

    pub fn line_count(&self) -> Option<usize> {
        self.lines.as_ref().map(Vec::len)
    }

    fn check_lines(&self) -> Result<(), String> {
        let Some(lines) = &self.lines else { return Ok(()) };
        if join_side(lines, |l| &l.0) != self.ocr_text {
            return Err("OCR lines do not join to ocr_text".into());
        }
        if join_side(lines, |l| &l.1) != self.gt_text {
            return Err("ground-truth lines do not join to gt_text".into());
        }
        Ok(())
    }
}

fn join_side<'a>(lines: &'a [(String, String)], side: impl Fn(&'a (String, String)) -> &'a String) -> String {
    lines.iter().map(side).map(String::as_str).collect::<Vec<_>>().join("\n")
}

fn parse_record(text: &str, line: usize) -> Result<DocumentPair, CorpusError> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        line,
        message: e.to_string(),
    })?;
    let misaligned = |message: String| CorpusError::LineMisalignment {
        line,
        id: raw.id.clone(),
        message,
    };
    let lines = match &raw.lines {
        None => None,
        Some(pairs) => Some(
            pairs
                .iter()
                .enumerate()
                .map(|(i, pair)| match pair.as_slice() {
                    [ocr, gt] => Ok((ocr.clone(), gt.clone())),
                    other => Err(misaligned(format!(
                        "line pair {i} has {} sides, expected 2",
                        other.len()
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let doc = DocumentPair {
        id: raw.id.clone(),
        dataset: Dataset::from(raw.dataset.clone()),
        periodical: raw.periodical.clone(),
        ocr_text: raw.ocr_text.clone(),
        gt_text: raw.gt_text.clone(),
        lines,
    };
    doc.check_lines().map_err(misaligned)?;
    Ok(doc)
}

/// Parses JSONL corpus text. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_corpus(text: &str) -> Result<Vec<DocumentPair>, CorpusError> {
    parse_corpus_lines(text.lines().map(|l| Ok(l.to_owned())))
}

fn parse_corpus_lines(
    lines: impl Iterator<Item = std::io::Result<String>>,
) -> Result<Vec<DocumentPair>, CorpusError> {
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_record(&line, idx + 1)?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: idx + 1,
                id: doc.id,
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: &Path) -> Result<Vec<DocumentPair>, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_corpus_lines(std::io::BufReader::new(file).lines())
}

pub fn write_corpus(out: &mut impl Write, docs: &[DocumentPair]) -> Result<(), CorpusError> {
    for doc in docs {
        serde_json::to_writer(&mut *out, doc).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_corpus(path: &Path, docs: &[DocumentPair]) -> Result<(), CorpusError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_corpus(&mut out, docs)?;
    out.flush()?;
    Ok(())
}

pub const CHUNK_SPAN: usize = 60;
pub const BLOCK_SIZES: [usize; 6] = [2, 5, 10, 15, 30, 60];

/// Keeps the first `n` aligned lines of `doc`.
pub fn truncate_lines(doc: &DocumentPair, n: usize) -> Result<DocumentPair, CorpusError> {
    let lines = doc.lines.as_ref().ok_or_else(|| CorpusError::NoLines(doc.id.clone()))?;
    if lines.len() < n {
        return Err(CorpusError::TooFewLines {
            id: doc.id.clone(),
            have: lines.len(),
            need: n,
        });
    }
    Ok(DocumentPair::from_lines(
        doc.id.clone(),
        doc.dataset.clone(),
        doc.periodical.clone(),
        lines[..n].to_vec(),
    ))
}

/// Splits the first 60 lines of `doc` into `60 / block_size` consecutive
/// children with ids `{parent}#k`, `k` counted from 0.
pub fn chunk_lines(doc: &DocumentPair, block_size: usize) -> Result<Vec<DocumentPair>, CorpusError> {
    if !BLOCK_SIZES.contains(&block_size) {
        return Err(CorpusError::InvalidBlockSize(block_size));
    }
    let truncated = truncate_lines(doc, CHUNK_SPAN)?;
    let lines = truncated.lines.expect("truncate_lines keeps alignment");
    Ok(lines
        .chunks(block_size)
        .enumerate()
        .map(|(k, block)| {
            DocumentPair::from_lines(
                format!("{}#{k}", doc.id),
                doc.dataset.clone(),
                doc.periodical.clone(),
                block.to_vec(),
            )
        })
        .collect())
}

pub fn select_long_articles(corpus: &[DocumentPair], min_lines: usize) -> Vec<DocumentPair> {
    corpus
        .iter()
        .filter(|d| d.line_count().unwrap_or(0) >= min_lines || min_lines == 0)
        .cloned()
        .collect()
}
