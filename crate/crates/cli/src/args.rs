use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "clocrc", version, about = "Batch evaluation harness for LLM post-OCR correction")]
pub struct Cli {
    /// `key = value` file supplying defaults for any flag of the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Import and filter corpora.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Inspect the prompt catalogue.
    #[command(subcommand)]
    Prompts(PromptsCommand),
    /// Run corrections over a corpus and append scored rows to a results file.
    Correct(CorrectArgs),
    /// Score ready-made hypotheses against a corpus.
    Evaluate(EvaluateArgs),
    /// Summarize a results file as a CER/ERP table.
    Report(ReportArgs),
    /// The joke-grid and task-length studies.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Significance testing.
    #[command(subcommand)]
    Stats(StatsCommand),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Convert a source corpus into the JSONL corpus format.
    Import(ImportArgs),
    /// Apply the token and symbol-ratio sampling heuristics.
    Filter(FilterArgs),
}

#[derive(Debug, Subcommand)]
pub enum PromptsCommand {
    /// Write the sub-prompts, combined prompts and experiment prompts as JSON.
    Export(ExportArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Corrupted joke phrases under basic, socio-cultural and misleading prompts.
    Joke(JokeArgs),
    /// CER by block size when documents are corrected in chunks of lines.
    Chunks(ChunksArgs),
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Bootstrapped two-sample t-test.
    Bootstrap(BootstrapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImportFormat {
    Jsonl,
    Overproof,
    Dir,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: ImportFormat,
    /// File (jsonl, overproof) or directory with `ocr/` and `gt/` (dir).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Dataset tag, e.g. NCSE, SMH or CA. Ignored for jsonl input.
    #[arg(long, default_value = "custom")]
    pub dataset: String,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Corpus JSONL, or page JSONL with `--pages`.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    /// Filter scanned pages (`{id, periodical, text}` rows) instead of articles.
    #[arg(long)]
    pub pages: bool,
    #[arg(long, default_value_t = 500)]
    pub min_page_tokens: usize,
    #[arg(long, default_value_t = 100)]
    pub min_article_tokens: usize,
    /// Fraction of highest symbol-ratio pages dropped per periodical.
    #[arg(long, default_value_t = 0.10)]
    pub drop_top_ratio: f64,
    /// Noise characters for the symbol ratio (default `:;-_+*^|¦'!/>][`).
    #[arg(long)]
    pub symbol_set: Option<String>,
    /// Keep only line-aligned articles with at least this many lines.
    #[arg(long)]
    pub min_lines: Option<usize>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Defaults to standard output.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// echo, replay, openai or anthropic.
    #[arg(long, default_value = "echo")]
    pub provider: String,
    /// Endpoint root for HTTP providers, e.g. a local OpenAI-compatible server.
    #[arg(long)]
    pub base_url: Option<String>,
    /// Environment variable holding the API key (default CLOCRC_API_KEY_<PROVIDER>).
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Replay fixture JSONL, required with `--provider replay`.
    #[arg(long, value_name = "FILE")]
    pub fixtures: Option<PathBuf>,
    /// Maximum requests in flight.
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Attempts per request, including the first.
    #[arg(long)]
    pub max_attempts: Option<u32>,
    /// Initial retry delay in milliseconds; doubles on every retry.
    #[arg(long)]
    pub backoff_ms: Option<u64>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    /// Drop a leading "Here is the corrected text:" style line.
    #[arg(long)]
    pub strip_commentary: bool,
    /// Regex for the commentary line (implies `--strip-commentary`).
    #[arg(long)]
    pub commentary_pattern: Option<String>,
}

#[derive(Debug, Args)]
pub struct NormalizationArgs {
    /// Lower-case both texts before computing CER.
    #[arg(long)]
    pub case_fold: bool,
    /// Skip NFC composition.
    #[arg(long)]
    pub no_unicode_normalization: bool,
    /// Compare whitespace exactly instead of collapsing runs.
    #[arg(long)]
    pub keep_whitespace: bool,
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    #[command(flatten)]
    pub normalization: NormalizationArgs,
    /// Tab-separated `surface<TAB>type` lexicon used as the NER backend.
    #[arg(long, value_name = "FILE", conflicts_with = "ner_endpoint")]
    pub gazetteer: Option<PathBuf>,
    /// HTTP NER service receiving `{"text": ...}`.
    #[arg(long, value_name = "URL")]
    pub ner_endpoint: Option<String>,
    /// Character window for entity F1 matches.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Key CoNES and F1 on surface form only.
    #[arg(long)]
    pub cones_ignore_type: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Median,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Model ids, comma separated or repeated. Defaults to the provider name
    /// for echo and replay.
    #[arg(long, value_delimiter = ',')]
    pub model: Vec<String>,
    /// Prompt labels from the catalogue.
    #[arg(long, value_delimiter = ',', default_value = "full-context")]
    pub prompt: Vec<String>,
    /// system-message and/or text-suffix.
    #[arg(long, value_delimiter = ',', default_value = "system-message")]
    pub placement: Vec<String>,
    /// Results JSONL; existing scored cells are skipped.
    #[arg(long, value_name = "FILE", default_value = "results.jsonl")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 4096)]
    pub max_tokens: u32,
    /// Request token log probabilities and record perplexity.
    #[arg(long)]
    pub logprobs: bool,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypothesisSource {
    Gt,
    Ocr,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Use the corpus's own ground truth or OCR as the hypothesis.
    #[arg(long, value_enum, conflicts_with = "hypotheses", required_unless_present = "hypotheses")]
    pub hypothesis_from: Option<HypothesisSource>,
    /// JSONL of `{"doc_id": ..., "text": ...}` hypotheses.
    #[arg(long, value_name = "FILE")]
    pub hypotheses: Option<PathBuf>,
    /// Model label for the rows (defaults to the hypothesis source).
    #[arg(long)]
    pub model: Option<String>,
    /// Prompt label for the rows.
    #[arg(long, default_value = "none")]
    pub prompt: String,
    /// Also append the scored rows to this results file.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "median")]
    pub aggregation: AggregationArg,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_name = "FILE", default_value = "results.jsonl")]
    pub results: PathBuf,
    #[arg(long, value_enum, default_value = "median")]
    pub aggregation: AggregationArg,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
    /// Defaults to standard output.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContextPrompt {
    Basic,
    Socio,
    Mislead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    Exact,
    Contains,
}

#[derive(Debug, Args)]
pub struct JokeArgs {
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Defaults to the provider name for echo and replay.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "basic,socio,mislead")]
    pub prompt: Vec<ContextPrompt>,
    #[arg(long, default_value_t = 100)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0.8)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "system-message")]
    pub placement: String,
    /// How a response is judged against the expected phrase.
    #[arg(long = "match", value_enum, default_value = "exact")]
    pub match_mode: MatchArg,
    #[arg(long, default_value_t = 4096)]
    pub max_tokens: u32,
    /// Full JSON result (cells and every trial).
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct ChunksArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Defaults to the provider name for echo and replay.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "2,5,10,15,30,60")]
    pub block_size: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "basic,socio,mislead")]
    pub prompt: Vec<ContextPrompt>,
    #[arg(long, default_value = "text-suffix")]
    pub placement: String,
    #[arg(long, value_enum, default_value = "median")]
    pub aggregation: AggregationArg,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 4096)]
    pub max_tokens: u32,
    #[command(flatten)]
    pub normalization: NormalizationArgs,
    /// Full JSON result (cells, per-chunk scores, skipped documents).
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleMetric {
    Erp,
    Cer,
    CerOrig,
    Cones,
    F1,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    /// Results JSONL to draw per-document samples from.
    #[arg(long, value_name = "FILE")]
    pub results: Option<PathBuf>,
    #[arg(long)]
    pub a_model: Option<String>,
    #[arg(long)]
    pub a_prompt: Option<String>,
    #[arg(long)]
    pub a_placement: Option<String>,
    /// Defaults to `--a-model`.
    #[arg(long)]
    pub b_model: Option<String>,
    /// Defaults to `--a-prompt`.
    #[arg(long)]
    pub b_prompt: Option<String>,
    /// Defaults to `--a-placement`.
    #[arg(long)]
    pub b_placement: Option<String>,
    /// Restrict both samples to one dataset.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Per-document value compared between the groups.
    #[arg(long, value_enum, default_value = "erp")]
    pub metric: SampleMetric,
    /// Plain-text sample, one number per line (instead of `--results`).
    #[arg(long, value_name = "FILE", requires = "b_values", conflicts_with = "results")]
    pub a_values: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "a_values")]
    pub b_values: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub dry_run: bool,
}
