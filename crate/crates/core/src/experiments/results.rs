//! Append-only JSONL result rows, one per plan cell.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::prompt_builder::Placement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub doc_id: String,
    pub dataset: String,
    pub model_id: String,
    pub prompt_label: String,
    pub placement: Placement,
    pub corrected_text: Option<String>,
    pub cer_orig: Option<f64>,
    pub cer_corrected: Option<f64>,
    pub erp: Option<f64>,
    pub cones: Option<f64>,
    pub f1: Option<f64>,
    pub perplexity: Option<f64>,
    pub error: Option<String>,
    pub attempt: u32,
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub doc_id: String,
    pub model_id: String,
    pub prompt_label: String,
    pub placement: Placement,
}

impl ResultRow {
    pub fn key(&self) -> CellKey {
        CellKey {
            doc_id: self.doc_id.clone(),
            model_id: self.model_id.clone(),
            prompt_label: self.prompt_label.clone(),
            placement: self.placement,
        }
    }

    /// True when the row carries a scored correction.
    pub fn is_scored(&self) -> bool {
        self.cer_corrected.is_some()
    }

    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("row serializes");
        s.push('\n');
        s
    }
}

pub fn parse_results(text: &str) -> Result<Vec<ResultRow>, ExperimentError> {
    parse_result_lines(text.lines().map(|l| Ok(l.to_owned())))
}

fn parse_result_lines(lines: impl Iterator<Item = std::io::Result<String>>) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| ExperimentError::Results {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}

/// Reads every row; a missing file reads as empty.
pub fn load_results(path: &Path) -> Result<Vec<ResultRow>, ExperimentError> {
    match std::fs::File::open(path) {
        Ok(f) => parse_result_lines(std::io::BufReader::new(f).lines()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

/// Keeps the last row written for each cell, in first-seen order.
pub fn latest_rows(rows: Vec<ResultRow>) -> Vec<ResultRow> {
    let mut index: HashMap<CellKey, usize> = HashMap::new();
    let mut out: Vec<ResultRow> = Vec::new();
    for row in rows {
        match index.get(&row.key()) {
            Some(&i) => out[i] = row,
            None => {
                index.insert(row.key(), out.len());
                out.push(row);
            }
        }
    }
    out
}

/// Single writer appending rows to a results file.
pub struct ResultsWriter {
    path: PathBuf,
    out: BufWriter<std::fs::File>,
}

impl ResultsWriter {
    pub fn open(path: &Path) -> Result<Self, ExperimentError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: path.to_owned(),
            out: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, row: &ResultRow) -> Result<(), ExperimentError> {
        self.out.write_all(row.to_json_line().as_bytes())?;
        self.out.flush()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
