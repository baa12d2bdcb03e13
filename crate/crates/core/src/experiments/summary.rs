use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::{latest_rows, ExperimentError, ResultRow};
use crate::prompt_builder::Placement;
use crate::text_metrics::{aggregate, format_two_decimals, Aggregation};

/// Aggregates for one (model, dataset, prompt, placement) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model_id: String,
    pub dataset: String,
    pub prompt_label: String,
    pub placement: Placement,
    pub documents: usize,
    pub scored: usize,
    pub failed: usize,
    /// Scored documents left out of ERP because their OCR was already exact.
    pub zero_orig: usize,
    pub cer_orig: Option<f64>,
    pub cer: Option<f64>,
    /// Aggregate of per-document ERPs.
    pub erp: Option<f64>,
    pub cones: Option<f64>,
    pub f1: Option<f64>,
}

fn agg(values: &[f64], mode: Aggregation) -> Option<f64> {
    aggregate(values, mode).ok()
}

/// Summarizes the latest row per cell. Groups come out sorted by model,
/// prompt, placement and dataset.
pub fn summarize(rows: &[ResultRow], aggregation: Aggregation) -> Result<Vec<SummaryRow>, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::EmptyResults);
    }
    let mut groups: BTreeMap<(String, String, Placement, String), Vec<ResultRow>> = BTreeMap::new();
    for row in latest_rows(rows.to_vec()) {
        let key = (row.model_id.clone(), row.prompt_label.clone(), row.placement, row.dataset.clone());
        groups.entry(key).or_default().push(row);
    }
    Ok(groups
        .into_iter()
        .map(|((model_id, prompt_label, placement, dataset), rows)| {
            let scored: Vec<&ResultRow> = rows.iter().filter(|r| r.is_scored()).collect();
            let collect = |f: fn(&ResultRow) -> Option<f64>| scored.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
            let erps = collect(|r| r.erp);
            SummaryRow {
                documents: rows.len(),
                scored: scored.len(),
                failed: rows.len() - scored.len(),
                zero_orig: scored.iter().filter(|r| r.cer_orig == Some(0.0)).count(),
                cer_orig: agg(&collect(|r| r.cer_orig), aggregation),
                cer: agg(&collect(|r| r.cer_corrected), aggregation),
                erp: agg(&erps, aggregation),
                cones: agg(&collect(|r| r.cones), aggregation),
                f1: agg(&collect(|r| r.f1), aggregation),
                model_id,
                dataset,
                prompt_label,
                placement,
            }
        })
        .collect())
}

fn cell(v: Option<f64>) -> String {
    v.map(format_two_decimals).unwrap_or_default()
}

struct WideTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Model rows by dataset columns, each dataset with a CER and an ERP
/// column, headed by the original OCR baseline.
fn wide_table(summary: &[SummaryRow], rows: &[ResultRow], aggregation: Aggregation) -> WideTable {
    let datasets: BTreeSet<&str> = summary.iter().map(|s| s.dataset.as_str()).collect();
    let mut header = vec!["Model".to_owned(), "Prompt".to_owned(), "Placement".to_owned()];
    for d in &datasets {
        header.push(format!("{d} CER"));
        header.push(format!("{d} ERP"));
    }

    // Baseline over distinct documents, whatever model scored them.
    let mut orig: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in rows {
        if let Some(c) = r.cer_orig {
            orig.entry(r.dataset.as_str()).or_default().insert(r.doc_id.as_str(), c);
        }
    }
    let mut baseline = vec!["Original".to_owned(), String::new(), String::new()];
    for d in &datasets {
        let values: Vec<f64> = orig.get(d).map(|m| m.values().copied().collect()).unwrap_or_default();
        let c = agg(&values, aggregation);
        baseline.push(cell(c));
        baseline.push(if c.is_some() { cell(Some(0.0)) } else { String::new() });
    }

    let mut by_run: BTreeMap<(&str, &str, Placement), BTreeMap<&str, &SummaryRow>> = BTreeMap::new();
    for s in summary {
        by_run
            .entry((s.model_id.as_str(), s.prompt_label.as_str(), s.placement))
            .or_default()
            .insert(s.dataset.as_str(), s);
    }
    let mut out = vec![baseline];
    for ((model, prompt, placement), per_ds) in by_run {
        let mut line = vec![model.to_owned(), prompt.to_owned(), placement.to_string()];
        for d in &datasets {
            let s = per_ds.get(d);
            line.push(cell(s.and_then(|s| s.cer)));
            line.push(cell(s.and_then(|s| s.erp)));
        }
        out.push(line);
    }
    WideTable { header, rows: out }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// CSV with one row per (model, prompt, placement) and CER/ERP columns per
/// dataset, values rounded to two decimals.
pub fn summary_csv(rows: &[ResultRow], aggregation: Aggregation) -> Result<String, ExperimentError> {
    let summary = summarize(rows, aggregation)?;
    let table = wide_table(&summary, rows, aggregation);
    let mut out = String::new();
    for line in std::iter::once(&table.header).chain(&table.rows) {
        out.push_str(&line.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    Ok(out)
}

fn md_line(out: &mut String, cells: &[String]) {
    let _ = writeln!(out, "| {} |", cells.join(" | "));
}

/// The CSV table as Markdown, followed by per-group counts and entity
/// scores.
pub fn summary_markdown(rows: &[ResultRow], aggregation: Aggregation) -> Result<String, ExperimentError> {
    let summary = summarize(rows, aggregation)?;
    let table = wide_table(&summary, rows, aggregation);
    let mode = match aggregation {
        Aggregation::Median => "median",
        Aggregation::Mean => "mean",
    };
    let mut out = format!("## CER and ERP ({mode})\n\n");
    md_line(&mut out, &table.header);
    let rule: Vec<String> = table
        .header
        .iter()
        .enumerate()
        .map(|(i, _)| if i < 3 { "---".to_owned() } else { "---:".to_owned() })
        .collect();
    md_line(&mut out, &rule);
    for line in &table.rows {
        md_line(&mut out, line);
    }

    out.push_str("\n## Details\n\n");
    let header: Vec<String> = [
        "Model", "Prompt", "Placement", "Dataset", "Docs", "Scored", "Failed", "Zero CER", "CER orig", "CER", "ERP",
        "CoNES", "F1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    md_line(&mut out, &header);
    md_line(
        &mut out,
        &header.iter().enumerate().map(|(i, _)| if i < 4 { "---" } else { "---:" }.to_owned()).collect::<Vec<_>>(),
    );
    for s in &summary {
        md_line(
            &mut out,
            &[
                s.model_id.clone(),
                s.prompt_label.clone(),
                s.placement.to_string(),
                s.dataset.clone(),
                s.documents.to_string(),
                s.scored.to_string(),
                s.failed.to_string(),
                s.zero_orig.to_string(),
                cell(s.cer_orig),
                cell(s.cer),
                cell(s.erp),
                cell(s.cones),
                cell(s.f1),
            ],
        );
    }
    Ok(out)
}
