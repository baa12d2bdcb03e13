//! Correction runs, summaries, significance testing and the two context
//! studies (joke grid and task length).

mod bootstrap;
mod joke;
mod results;
mod runner;
mod summary;
mod task_length;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::llm_client::ProviderError;
use crate::prompt_builder::PromptError;
use crate::text_metrics::MetricError;

pub use bootstrap::{bootstrap_test, t_statistic, SignificanceResult, DEFAULT_RESAMPLES};
pub use joke::{
    normalize_answer, run_joke_grid, JokeCell, JokeConfig, JokeGridResult, JokePhrase, JokeTrial, MatchMode,
};
pub use results::{latest_rows, load_results, parse_results, CellKey, ResultRow, ResultsWriter};
pub use runner::{
    plan_cells, run_corrections, score_document, score_hypotheses, DocumentScores, PlannedCell, RunConfig, RunReport,
    Scoring,
};
pub use summary::{summarize, summary_csv, summary_markdown, SummaryRow};
pub use task_length::{
    run_task_length, task_length_requests, ChunkDiagnostic, TaskLengthCell, TaskLengthConfig, TaskLengthReport,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("results line {line}: {message}")]
    Results { line: usize, message: String },
    #[error("no results to summarize")]
    EmptyResults,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    /// A provider failure that makes further cells pointless (bad key).
    #[error("run aborted at `{doc_id}`: {error}")]
    Aborted { doc_id: String, error: ProviderError },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Only authentication failures stop a run; everything else is recorded
/// against its cell.
pub(crate) fn aborts_run(error: &ProviderError) -> bool {
    matches!(error, ProviderError::Auth(_))
}
