//! Importers for corpus layouts other than JSONL.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use super::{CorpusError, Dataset, DocumentPair};

/// Marks the start of an article in Overproof evaluation files.
pub const OVERPROOF_HEADER: &str = "*$*OVERPROOF*$*";
/// Separates the OCR line from its corrected line.
pub const OVERPROOF_SEPARATOR: &str = "||@@||";

/// Parses Overproof's line-aligned format: a header line per article, then
/// one `ocr||@@||corrected` pair per line. Blank lines inside an article
/// become empty line pairs.
pub fn parse_overproof(text: &str, dataset: &Dataset) -> Result<Vec<DocumentPair>, CorpusError> {
    let mut docs = Vec::new();
    let mut current: Option<(String, Vec<(String, String)>)> = None;
    let mut seen = HashSet::new();

    let finish = |current: Option<(String, Vec<(String, String)>)>, docs: &mut Vec<DocumentPair>| {
        if let Some((id, lines)) = current {
            docs.push(DocumentPair::from_lines(id, dataset.clone(), None, lines));
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(rest) = line.strip_prefix(OVERPROOF_HEADER) {
            finish(current.take(), &mut docs);
            let id = rest
                .split("*$*")
                .map(str::trim)
                .find(|s| !s.is_empty())
                .map(str::to_owned)
                .unwrap_or_else(|| format!("article-{}", docs.len() + 1));
            if !seen.insert(id.clone()) {
                return Err(CorpusError::DuplicateId { line: line_no, id });
            }
            current = Some((id, Vec::new()));
            continue;
        }
        let Some((_, lines)) = current.as_mut() else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(CorpusError::Parse {
                line: line_no,
                message: "content before the first article header".into(),
            });
        };
        if line.is_empty() {
            lines.push((String::new(), String::new()));
            continue;
        }
        let (ocr, gt) = line.split_once(OVERPROOF_SEPARATOR).ok_or_else(|| CorpusError::Parse {
            line: line_no,
            message: format!("missing `{OVERPROOF_SEPARATOR}` separator"),
        })?;
        lines.push((ocr.to_owned(), gt.to_owned()));
    }
    finish(current, &mut docs);
    Ok(docs)
}

pub fn import_overproof(path: &Path, dataset: &Dataset) -> Result<Vec<DocumentPair>, CorpusError> {
    parse_overproof(&std::fs::read_to_string(path)?, dataset)
}

/// Imports a directory holding `ocr/` and `gt/` subdirectories of text files
/// paired by file name. The id is the file stem.
pub fn import_dir(root: &Path, dataset: &Dataset) -> Result<Vec<DocumentPair>, CorpusError> {
    let list = |sub: &str| -> Result<BTreeMap<String, std::path::PathBuf>, CorpusError> {
        let dir = root.join(sub);
        if !dir.is_dir() {
            return Err(CorpusError::Import(format!("missing directory {}", dir.display())));
        }
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_file() {
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_owned();
                files.insert(name, path);
            }
        }
        Ok(files)
    };
    let ocr = list("ocr")?;
    let gt = list("gt")?;
    if let Some(name) = ocr.keys().find(|k| !gt.contains_key(*k)) {
        return Err(CorpusError::Import(format!("`ocr/{name}` has no counterpart in gt/")));
    }
    if let Some(name) = gt.keys().find(|k| !ocr.contains_key(*k)) {
        return Err(CorpusError::Import(format!("`gt/{name}` has no counterpart in ocr/")));
    }
    let mut seen = HashSet::new();
    let mut docs = Vec::with_capacity(ocr.len());
    for (name, ocr_path) in &ocr {
        let id = Path::new(name)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(name)
            .to_owned();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::Import(format!("duplicate id `{id}` from file stems")));
        }
        docs.push(DocumentPair {
            id,
            dataset: dataset.clone(),
            periodical: None,
            ocr_text: std::fs::read_to_string(ocr_path)?,
            gt_text: std::fs::read_to_string(&gt[name])?,
            lines: None,
        });
    }
    Ok(docs)
}
