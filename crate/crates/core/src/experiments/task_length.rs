use std::collections::BTreeMap;

use serde::Serialize;

use super::{aborts_run, ExperimentError};
use crate::corpus::{chunk_lines, truncate_lines, CorpusError, DocumentPair, BLOCK_SIZES, CHUNK_SPAN};
use crate::llm_client::{map_ordered, ChatRequest, Client, RecordMeta, CORRECTION_TEMPERATURE, DEFAULT_MAX_OUTPUT_TOKENS};
use crate::prompt_builder::{experiment_prompts, render_text, ExperimentPrompt, Placement};
use crate::text_metrics::{aggregate, cer, Aggregation, NormalizationPolicy};

#[derive(Debug, Clone)]
pub struct TaskLengthConfig {
    pub model_id: String,
    pub block_sizes: Vec<usize>,
    pub prompts: Vec<ExperimentPrompt>,
    pub placement: Placement,
    pub aggregation: Aggregation,
    pub policy: NormalizationPolicy,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub workers: Option<usize>,
}

impl TaskLengthConfig {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            block_sizes: BLOCK_SIZES.to_vec(),
            prompts: vec![ExperimentPrompt::ChunkBasic, ExperimentPrompt::ChunkSocio, ExperimentPrompt::ChunkMislead],
            placement: Placement::TextSuffix,
            aggregation: Aggregation::Median,
            policy: NormalizationPolicy::default(),
            temperature: CORRECTION_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskLengthCell {
    pub block_size: usize,
    pub prompt: ExperimentPrompt,
    /// Documents whose chunks all came back.
    pub documents: usize,
    pub failed_documents: usize,
    pub cer: Option<f64>,
}

/// CER of one corrected chunk against its own ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkDiagnostic {
    pub chunk_id: String,
    pub block_size: usize,
    pub prompt: ExperimentPrompt,
    pub cer: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskLengthReport {
    pub cells: Vec<TaskLengthCell>,
    pub chunks: Vec<ChunkDiagnostic>,
    /// Documents without 60 aligned lines.
    pub skipped: Vec<String>,
}

struct ChunkJob {
    block_size: usize,
    prompt: ExperimentPrompt,
    doc: usize,
    chunk: DocumentPair,
}

/// Number of requests `run_task_length` would send.
pub fn task_length_requests(corpus: &[DocumentPair], config: &TaskLengthConfig) -> usize {
    let eligible = corpus.iter().filter(|d| truncate_lines(d, CHUNK_SPAN).is_ok()).count();
    eligible * config.prompts.len() * config.block_sizes.iter().map(|x| CHUNK_SPAN / x).sum::<usize>()
}

/// Corrects each eligible document in blocks of `x` lines for every block
/// size and prompt, rejoins the corrected blocks with `\n` and scores the
/// result against the first 60 ground-truth lines.
pub fn run_task_length(
    client: &Client,
    corpus: &[DocumentPair],
    config: &TaskLengthConfig,
) -> Result<TaskLengthReport, ExperimentError> {
    if let Some(&bad) = config.block_sizes.iter().find(|x| !BLOCK_SIZES.contains(x)) {
        return Err(CorpusError::InvalidBlockSize(bad).into());
    }
    if config.prompts.is_empty() || config.block_sizes.is_empty() {
        return Err(ExperimentError::InvalidParam("need at least one block size and prompt".into()));
    }
    let mut truncated = Vec::new();
    let mut skipped = Vec::new();
    for doc in corpus {
        match truncate_lines(doc, CHUNK_SPAN) {
            Ok(t) => truncated.push(t),
            Err(CorpusError::TooFewLines { .. } | CorpusError::NoLines(_)) => skipped.push(doc.id.clone()),
            Err(e) => return Err(e.into()),
        }
    }

    let mut jobs = Vec::new();
    for &block_size in &config.block_sizes {
        for &prompt in &config.prompts {
            for (doc, t) in truncated.iter().enumerate() {
                for chunk in chunk_lines(t, block_size)? {
                    jobs.push(ChunkJob { block_size, prompt, doc, chunk });
                }
            }
        }
    }

    let workers = config.workers.unwrap_or(client.config().max_concurrency).max(1);
    let run = |job: &ChunkJob| {
        let prompt_text = experiment_prompts(job.prompt);
        let rendered = match render_text(&job.chunk.ocr_text, &prompt_text, config.placement) {
            Ok(r) => r,
            // an empty block has nothing to correct
            Err(_) => return Ok(String::new()),
        };
        let mut req = ChatRequest::from_rendered(&config.model_id, rendered);
        req.temperature = config.temperature;
        req.max_output_tokens = config.max_output_tokens;
        let meta = RecordMeta {
            doc_id: job.chunk.id.clone(),
            prompt_label: job.prompt.as_str().to_owned(),
            placement: config.placement,
        };
        client.complete(&req, meta).map(|r| r.corrected_text)
    };
    let mut outputs: Vec<Result<String, String>> = Vec::with_capacity(jobs.len());
    map_ordered(&jobs, workers, run, |i, outcome| {
        match outcome {
            Ok(text) => outputs.push(Ok(text)),
            Err(failure) if aborts_run(&failure.error) => {
                return Err(ExperimentError::Aborted {
                    doc_id: jobs[i].chunk.id.clone(),
                    error: failure.error,
                })
            }
            Err(failure) => outputs.push(Err(failure.error.tag())),
        }
        Ok(())
    })?;

    let mut chunks = Vec::with_capacity(jobs.len());
    let mut assembled: BTreeMap<(usize, usize, usize), Option<Vec<&str>>> = BTreeMap::new();
    let mut cell_order: Vec<(usize, ExperimentPrompt)> = Vec::new();
    for (job, out) in jobs.iter().zip(&outputs) {
        let pi = config.prompts.iter().position(|p| *p == job.prompt).expect("planned prompt");
        let bi = config.block_sizes.iter().position(|b| *b == job.block_size).expect("planned size");
        if !cell_order.contains(&(job.block_size, job.prompt)) {
            cell_order.push((job.block_size, job.prompt));
        }
        let slot = assembled.entry((bi, pi, job.doc)).or_insert_with(|| Some(Vec::new()));
        let (chunk_cer, error) = match out {
            Ok(text) => {
                if let Some(parts) = slot {
                    parts.push(text.as_str());
                }
                (cer(&job.chunk.gt_text, text, &config.policy).ok().map(|c| c.0), None)
            }
            Err(tag) => {
                *slot = None;
                (None, Some(tag.clone()))
            }
        };
        chunks.push(ChunkDiagnostic {
            chunk_id: job.chunk.id.clone(),
            block_size: job.block_size,
            prompt: job.prompt,
            cer: chunk_cer,
            error,
        });
    }

    let cells = cell_order
        .into_iter()
        .map(|(block_size, prompt)| {
            let pi = config.prompts.iter().position(|p| *p == prompt).expect("planned prompt");
            let bi = config.block_sizes.iter().position(|b| *b == block_size).expect("planned size");
            let mut values = Vec::new();
            let mut failed = 0;
            for (doc, t) in truncated.iter().enumerate() {
                match assembled.get(&(bi, pi, doc)) {
                    Some(Some(parts)) => match cer(&t.gt_text, &parts.join("\n"), &config.policy) {
                        Ok(c) => values.push(c.0),
                        Err(_) => failed += 1,
                    },
                    _ => failed += 1,
                }
            }
            TaskLengthCell {
                block_size,
                prompt,
                documents: values.len(),
                failed_documents: failed,
                cer: aggregate(&values, config.aggregation).ok(),
            }
        })
        .collect();
    Ok(TaskLengthReport { cells, chunks, skipped })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::corpus::Dataset;
    use crate::llm_client::{EchoProvider, Provider, ProviderConfig, ProviderError, ProviderKind, ProviderResponse};

    fn doc(id: &str, n: usize) -> DocumentPair {
        let lines = (0..n)
            .map(|i| (format!("tbe line {i} of tcxt"), format!("the line {i} of text")))
            .collect();
        DocumentPair::from_lines(id, Dataset::Smh, None, lines)
    }

    fn client(p: impl Provider + 'static) -> Client {
        let mut cfg = ProviderConfig::new("t", ProviderKind::Echo, "");
        cfg.retry.max_attempts = 1;
        Client::new(Arc::new(p), cfg)
    }

    /// Answers each block with its ground truth.
    struct Oracle(Vec<DocumentPair>);
    impl Provider for Oracle {
        fn send(&self, req: &ChatRequest) -> Result<ProviderResponse, ProviderError> {
            let ocr = req.user.split("\n\n").next().unwrap();
            let gt: Vec<String> = ocr
                .lines()
                .map(|l| {
                    self.0
                        .iter()
                        .flat_map(|d| d.lines.as_ref().unwrap())
                        .find(|(o, _)| o == l)
                        .map(|(_, g)| g.clone())
                        .unwrap()
                })
                .collect();
            Ok(ProviderResponse { text: gt.join("\n"), token_logprobs: None })
        }
    }

    struct Down;
    impl Provider for Down {
        fn send(&self, _: &ChatRequest) -> Result<ProviderResponse, ProviderError> {
            Err(ProviderError::Timeout)
        }
    }

    #[test]
    fn echo_matches_unchunked_cer() {
        let corpus = vec![doc("a", 61), doc("b", 60), doc("short", 59)];
        let cfg = TaskLengthConfig::new("m");
        let report = run_task_length(&client(EchoProvider::new()), &corpus, &cfg).unwrap();
        assert_eq!(report.skipped, vec!["short".to_owned()]);
        assert_eq!(report.cells.len(), 6 * 3);
        let t = truncate_lines(&corpus[0], 60).unwrap();
        let expected = cer(&t.gt_text, &t.ocr_text, &NormalizationPolicy::default()).unwrap().0;
        for cell in &report.cells {
            assert_eq!(cell.documents, 2);
            assert_eq!(cell.cer, Some(expected), "x = {}", cell.block_size);
        }
        assert_eq!(report.chunks.len(), task_length_requests(&corpus, &cfg));
    }

    #[test]
    fn oracle_scores_zero() {
        let corpus = vec![doc("a", 60)];
        let report = run_task_length(&client(Oracle(corpus.clone())), &corpus, &TaskLengthConfig::new("m")).unwrap();
        assert!(report.cells.iter().all(|c| c.cer == Some(0.0)));
        assert!(report.chunks.iter().all(|c| c.cer == Some(0.0)));
    }

    #[test]
    fn failures_are_counted() {
        let corpus = vec![doc("a", 60)];
        let mut cfg = TaskLengthConfig::new("m");
        cfg.block_sizes = vec![30];
        let report = run_task_length(&client(Down), &corpus, &cfg).unwrap();
        assert!(report.cells.iter().all(|c| c.failed_documents == 1 && c.cer.is_none()));
        assert!(report.chunks.iter().all(|c| c.error.as_deref() == Some("timeout")));
    }

    #[test]
    fn rejects_bad_block_size() {
        let mut cfg = TaskLengthConfig::new("m");
        cfg.block_sizes = vec![7];
        assert!(matches!(
            run_task_length(&client(EchoProvider::new()), &[], &cfg),
            Err(ExperimentError::Corpus(CorpusError::InvalidBlockSize(7)))
        ));
    }
}
