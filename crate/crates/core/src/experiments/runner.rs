use std::collections::HashSet;
use std::path::PathBuf;

use chrono::{DateTime, SecondsFormat, Utc};

use super::{aborts_run, latest_rows, load_results, CellKey, ExperimentError, ResultRow, ResultsWriter};
use crate::corpus::DocumentPair;
use crate::entity_metrics::{build_vectors_keyed, cones, windowed_f1_keyed, EntityKeying, EntityMention, DEFAULT_F1_WINDOW};
use crate::llm_client::{
    map_ordered, perplexity, ChatRequest, Client, ProviderError, RecordMeta, CORRECTION_TEMPERATURE,
    DEFAULT_MAX_OUTPUT_TOKENS,
};
use crate::ner::{extract_entities, NerBackend};
use crate::prompt_builder::{lookup, render, Placement, PromptSpec};
use crate::text_metrics::{cer, erp, Aggregation, NormalizationPolicy};

/// How corrections are scored.
#[derive(Debug, Clone)]
pub struct Scoring {
    pub policy: NormalizationPolicy,
    /// Entity metrics are skipped (left null) without a backend.
    pub ner: Option<NerBackend>,
    pub window: usize,
    pub keying: EntityKeying,
}

impl Default for Scoring {
    fn default() -> Self {
        Self {
            policy: NormalizationPolicy::default(),
            ner: None,
            window: DEFAULT_F1_WINDOW,
            keying: EntityKeying::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub prompt_labels: Vec<String>,
    pub placements: Vec<Placement>,
    pub models: Vec<String>,
    pub aggregation: Aggregation,
    pub seed: u64,
    pub output: PathBuf,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub want_logprobs: bool,
    /// Defaults to the provider's `max_concurrency`.
    pub workers: Option<usize>,
    pub scoring: Scoring,
}

impl RunConfig {
    pub fn new(models: Vec<String>, prompt_labels: Vec<String>, output: impl Into<PathBuf>) -> Self {
        Self {
            prompt_labels,
            placements: vec![Placement::SystemMessage],
            models,
            aggregation: Aggregation::Median,
            seed: 0,
            output: output.into(),
            temperature: CORRECTION_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            want_logprobs: false,
            workers: None,
            scoring: Scoring::default(),
        }
    }
}

/// One (document, model, prompt, placement) cell.
#[derive(Debug, Clone)]
pub struct PlannedCell {
    pub doc_index: usize,
    pub model_id: String,
    pub spec: PromptSpec,
}

impl PlannedCell {
    pub fn key(&self, corpus: &[DocumentPair]) -> CellKey {
        CellKey {
            doc_id: corpus[self.doc_index].id.clone(),
            model_id: self.model_id.clone(),
            prompt_label: self.spec.label.clone(),
            placement: self.spec.placement,
        }
    }
}

/// The full cross product, ordered model, prompt, placement, document.
/// Prompt labels are resolved to their canonical names.
pub fn plan_cells(config: &RunConfig, corpus: &[DocumentPair]) -> Result<Vec<PlannedCell>, ExperimentError> {
    if config.models.is_empty() || config.prompt_labels.is_empty() || config.placements.is_empty() {
        return Err(ExperimentError::InvalidParam(
            "a run needs at least one model, prompt and placement".into(),
        ));
    }
    let mut specs = Vec::new();
    for label in &config.prompt_labels {
        let canonical = lookup(label)?.label;
        for &placement in &config.placements {
            specs.push(PromptSpec::from_label(canonical, placement)?);
        }
    }
    let mut cells = Vec::new();
    for model in &config.models {
        for spec in &specs {
            for doc_index in 0..corpus.len() {
                cells.push(PlannedCell {
                    doc_index,
                    model_id: model.clone(),
                    spec: spec.clone(),
                });
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub planned: usize,
    /// Cells that already had a scored row.
    pub skipped: usize,
    pub completed: usize,
    pub failed: usize,
    pub rows: Vec<ResultRow>,
}

/// Per-document scores for one hypothesis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocumentScores {
    pub cer_orig: Option<f64>,
    pub cer_corrected: Option<f64>,
    /// Null when the original CER is zero.
    pub erp: Option<f64>,
    pub cones: Option<f64>,
    pub f1: Option<f64>,
    pub error: Option<String>,
}

type GtEntities = Option<Result<Vec<EntityMention>, String>>;

fn gt_entities(doc: &DocumentPair, scoring: &Scoring) -> GtEntities {
    scoring
        .ner
        .as_ref()
        .map(|backend| extract_entities(&doc.gt_text, backend).map_err(|e| e.to_string()))
}

fn score_with(doc: &DocumentPair, hypothesis: &str, scoring: &Scoring, gt: &GtEntities) -> DocumentScores {
    let mut out = DocumentScores::default();
    let cer_orig = match cer(&doc.gt_text, &doc.ocr_text, &scoring.policy) {
        Ok(v) => v,
        Err(e) => {
            out.error = Some(format!("metric: {e}"));
            return out;
        }
    };
    out.cer_orig = Some(cer_orig.0);
    let cer_lm = cer(&doc.gt_text, hypothesis, &scoring.policy).expect("reference already validated");
    out.cer_corrected = Some(cer_lm.0);
    out.erp = erp(cer_orig, cer_lm).ok().map(|v| v.0);

    match (gt, &scoring.ner) {
        (Some(Ok(reference)), Some(backend)) => match extract_entities(hypothesis, backend) {
            Ok(pred) => {
                out.cones = Some(cones(&build_vectors_keyed(&pred, reference, scoring.keying)));
                out.f1 = Some(windowed_f1_keyed(&pred, reference, scoring.window, scoring.keying).f1);
            }
            Err(e) => out.error = Some(format!("ner: {e}")),
        },
        (Some(Err(e)), _) => out.error = Some(format!("ner: {e}")),
        _ => {}
    }
    out
}

/// Scores `hypothesis` against `doc` (CER, ERP and, with a NER backend,
/// CoNES and windowed F1).
pub fn score_document(doc: &DocumentPair, hypothesis: &str, scoring: &Scoring) -> DocumentScores {
    score_with(doc, hypothesis, scoring, &gt_entities(doc, scoring))
}

fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn row_from(doc: &DocumentPair, key: CellKey, scores: DocumentScores) -> ResultRow {
    ResultRow {
        doc_id: key.doc_id,
        dataset: doc.dataset.to_string(),
        model_id: key.model_id,
        prompt_label: key.prompt_label,
        placement: key.placement,
        corrected_text: None,
        cer_orig: scores.cer_orig,
        cer_corrected: scores.cer_corrected,
        erp: scores.erp,
        cones: scores.cones,
        f1: scores.f1,
        perplexity: None,
        error: scores.error,
        attempt: 0,
        created_at: timestamp(Utc::now()),
    }
}

/// Scores externally produced hypotheses. `hypothesis` returns `None` for
/// documents it has no text for; those rows carry a `missing_hypothesis`
/// error.
pub fn score_hypotheses(
    corpus: &[DocumentPair],
    hypothesis: impl Fn(&DocumentPair) -> Option<String>,
    model_id: &str,
    prompt_label: &str,
    scoring: &Scoring,
) -> Vec<ResultRow> {
    corpus
        .iter()
        .map(|doc| {
            let key = CellKey {
                doc_id: doc.id.clone(),
                model_id: model_id.to_owned(),
                prompt_label: prompt_label.to_owned(),
                placement: Placement::SystemMessage,
            };
            match hypothesis(doc) {
                Some(text) => {
                    let mut row = row_from(doc, key, score_document(doc, &text, scoring));
                    row.corrected_text = Some(text);
                    row
                }
                None => {
                    let mut row = row_from(doc, key, DocumentScores::default());
                    row.cer_orig = cer(&doc.gt_text, &doc.ocr_text, &scoring.policy).ok().map(|c| c.0);
                    row.error = Some("missing_hypothesis".into());
                    row
                }
            }
        })
        .collect()
}

struct CellOutcome {
    row: ResultRow,
    abort: Option<ProviderError>,
}

/// Executes every plan cell not yet scored in `config.output`, appending
/// one row per cell as it completes. Rows are written in plan order by a
/// single writer. Provider failures are recorded on their cell; an
/// authentication failure stops the run after its row is written.
pub fn run_corrections(
    config: &RunConfig,
    corpus: &[DocumentPair],
    client: &Client,
) -> Result<RunReport, ExperimentError> {
    let cells = plan_cells(config, corpus)?;
    let done: HashSet<CellKey> = latest_rows(load_results(&config.output)?)
        .into_iter()
        .filter(ResultRow::is_scored)
        .map(|r| r.key())
        .collect();
    let planned = cells.len();
    let todo: Vec<PlannedCell> = cells.into_iter().filter(|c| !done.contains(&c.key(corpus))).collect();
    let skipped = planned - todo.len();
    let workers = config.workers.unwrap_or(client.config().max_concurrency).max(1);

    let needed: Vec<usize> = {
        let mut seen: Vec<usize> = todo.iter().map(|c| c.doc_index).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    };
    let mut gt: Vec<GtEntities> = vec![None; corpus.len()];
    if config.scoring.ner.is_some() {
        let mut extracted = Vec::with_capacity(needed.len());
        map_ordered(&needed, workers, |&i| gt_entities(&corpus[i], &config.scoring), |_, e| {
            extracted.push(e);
            Ok::<_, ExperimentError>(())
        })?;
        for (i, e) in needed.iter().zip(extracted) {
            gt[*i] = e;
        }
    }

    let mut writer = ResultsWriter::open(&config.output)?;
    let mut report = RunReport {
        planned,
        skipped,
        completed: 0,
        failed: 0,
        rows: Vec::new(),
    };
    let run_cell = |cell: &PlannedCell| -> CellOutcome {
        let doc = &corpus[cell.doc_index];
        let key = cell.key(corpus);
        let rendered = match render(&doc.ocr_text, &cell.spec) {
            Ok(r) => r,
            Err(e) => {
                let mut row = row_from(doc, key, DocumentScores::default());
                row.error = Some(format!("prompt: {e}"));
                return CellOutcome { row, abort: None };
            }
        };
        let mut request = ChatRequest::from_rendered(&cell.model_id, rendered);
        request.temperature = config.temperature;
        request.max_output_tokens = config.max_output_tokens;
        request.want_logprobs = config.want_logprobs;
        request.seed = Some(config.seed);
        let meta = RecordMeta {
            doc_id: doc.id.clone(),
            prompt_label: cell.spec.label.clone(),
            placement: cell.spec.placement,
        };
        match client.complete(&request, meta) {
            Ok(record) => {
                let scores = score_with(doc, &record.corrected_text, &config.scoring, &gt[cell.doc_index]);
                let mut row = row_from(doc, key, scores);
                row.perplexity = record.token_logprobs.as_deref().and_then(|lp| perplexity(lp).ok());
                row.corrected_text = Some(record.corrected_text);
                row.attempt = record.attempt;
                row.created_at = timestamp(record.created_at);
                CellOutcome { row, abort: None }
            }
            Err(failure) => {
                let mut row = row_from(doc, key, DocumentScores::default());
                row.cer_orig = cer(&doc.gt_text, &doc.ocr_text, &config.scoring.policy).ok().map(|c| c.0);
                row.error = Some(failure.error.tag());
                row.attempt = failure.attempts;
                let abort = aborts_run(&failure.error).then_some(failure.error);
                CellOutcome { row, abort }
            }
        }
    };
    map_ordered(&todo, workers, run_cell, |_, outcome| {
        writer.append(&outcome.row)?;
        if outcome.row.is_scored() {
            report.completed += 1;
        } else {
            report.failed += 1;
        }
        let doc_id = outcome.row.doc_id.clone();
        report.rows.push(outcome.row);
        match outcome.abort {
            Some(error) => Err(ExperimentError::Aborted { doc_id, error }),
            None => Ok(()),
        }
    })?;
    Ok(report)
}
