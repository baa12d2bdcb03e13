use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};

use clocrc::corpus::{
    filter_articles, filter_pages, import_dir, import_overproof, load_corpus, load_pages, save_corpus,
    select_long_articles, Dataset, DocumentPair, PageFilter, SymbolSet,
};
use clocrc::entity_metrics::EntityKeying;
use clocrc::experiments::{
    bootstrap_test, latest_rows, load_results, plan_cells, run_corrections, run_joke_grid, run_task_length,
    score_hypotheses, summarize, summary_csv, summary_markdown, task_length_requests, JokeConfig, MatchMode,
    ResultRow, ResultsWriter, RunConfig, Scoring, TaskLengthConfig,
};
use clocrc::llm_client::{
    Client, CommentaryFilter, EchoProvider, Provider, ProviderConfig, ProviderKind, ReplayProvider,
};
use clocrc::ner::{Gazetteer, HttpNer, NerBackend};
use clocrc::prompt_builder::{catalogue_json, ExperimentPrompt, Placement, COMBINED_PROMPTS};
use clocrc::text_metrics::{format_two_decimals, Aggregation, NormalizationPolicy, UnicodeForm};

use crate::args::*;
use crate::inputs::{parse_hypotheses, parse_values};

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Corpus(CorpusCommand::Import(a)) => corpus_import(a),
        Command::Corpus(CorpusCommand::Filter(a)) => corpus_filter(a),
        Command::Prompts(PromptsCommand::Export(a)) => prompts_export(a),
        Command::Correct(a) => correct(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
        Command::Experiment(ExperimentCommand::Joke(a)) => joke(a),
        Command::Experiment(ExperimentCommand::Chunks(a)) => chunks(a),
        Command::Stats(StatsCommand::Bootstrap(a)) => stats_bootstrap(a),
    }
}

fn emit(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, content).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn read_corpus(path: &Path) -> Result<Vec<DocumentPair>> {
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn aggregation(a: AggregationArg) -> Aggregation {
    match a {
        AggregationArg::Median => Aggregation::Median,
        AggregationArg::Mean => Aggregation::Mean,
    }
}

fn placement(s: &str) -> Result<Placement> {
    Ok(s.parse::<Placement>()?)
}

fn policy(n: &NormalizationArgs) -> NormalizationPolicy {
    NormalizationPolicy {
        unicode_form: if n.no_unicode_normalization {
            UnicodeForm::None
        } else {
            UnicodeForm::CanonicalComposed
        },
        collapse_whitespace: !n.keep_whitespace,
        case_fold: n.case_fold,
    }
}

fn scoring(s: &ScoringArgs) -> Result<Scoring> {
    let ner = match (&s.gazetteer, &s.ner_endpoint) {
        (Some(path), _) => Some(NerBackend::Gazetteer(
            Gazetteer::load(path).with_context(|| format!("loading gazetteer {}", path.display()))?,
        )),
        (None, Some(url)) => Some(NerBackend::Http(HttpNer::new(url.clone(), Duration::from_secs(60)))),
        (None, None) => None,
    };
    Ok(Scoring {
        policy: policy(&s.normalization),
        ner,
        window: s.window,
        keying: if s.cones_ignore_type {
            EntityKeying::SurfaceOnly
        } else {
            EntityKeying::SurfaceAndType
        },
    })
}

fn provider_config(p: &ProviderArgs) -> Result<ProviderConfig> {
    let mut cfg = ProviderConfig::builtin(&p.provider)
        .ok_or_else(|| anyhow!("unknown provider `{}` (expected echo, replay, openai or anthropic)", p.provider))?;
    if let Some(url) = &p.base_url {
        cfg.base_url = url.clone();
    }
    if let Some(var) = &p.api_key_env {
        cfg.auth_env_var = var.clone();
    }
    if let Some(n) = p.concurrency {
        if n == 0 {
            bail!("--concurrency must be at least 1");
        }
        cfg.max_concurrency = n;
    }
    if let Some(n) = p.max_attempts {
        cfg.retry.max_attempts = n.max(1);
    }
    if let Some(ms) = p.backoff_ms {
        cfg.retry.backoff = Duration::from_millis(ms);
    }
    if let Some(s) = p.timeout_secs {
        cfg.timeout = Duration::from_secs(s);
    }
    if cfg.kind == ProviderKind::Replay && p.fixtures.is_none() {
        bail!("--provider replay needs --fixtures");
    }
    Ok(cfg)
}

fn connect(p: &ProviderArgs) -> Result<Client> {
    let cfg = provider_config(p)?;
    let provider: Arc<dyn Provider> = match cfg.kind {
        ProviderKind::Echo => Arc::new(EchoProvider::new()),
        ProviderKind::Replay => {
            let path = p.fixtures.as_ref().expect("checked in provider_config");
            Arc::new(ReplayProvider::load(path).with_context(|| format!("loading fixtures {}", path.display()))?)
        }
        ProviderKind::Http(_) => Arc::new(cfg.connect_http()?),
    };
    let filter = match (&p.commentary_pattern, p.strip_commentary) {
        (Some(pat), _) => Some(CommentaryFilter::new(pat).context("invalid --commentary-pattern")?),
        (None, true) => Some(CommentaryFilter::default()),
        (None, false) => None,
    };
    Ok(Client::new(provider, cfg).with_commentary_filter(filter))
}

fn default_model(p: &ProviderArgs, model: Option<&String>) -> Result<String> {
    match model {
        Some(m) => Ok(m.clone()),
        None if matches!(p.provider.as_str(), "echo" | "replay") => Ok(p.provider.clone()),
        None => bail!("--model is required for provider `{}`", p.provider),
    }
}

fn corpus_import(a: ImportArgs) -> Result<()> {
    let dataset = Dataset::from(a.dataset.clone());
    let docs = match a.format {
        ImportFormat::Jsonl => read_corpus(&a.input)?,
        ImportFormat::Overproof => import_overproof(&a.input, &dataset)?,
        ImportFormat::Dir => import_dir(&a.input, &dataset)?,
    };
    if a.dry_run {
        println!("would import {} documents into {}", docs.len(), a.output.display());
        return Ok(());
    }
    save_corpus(&a.output, &docs)?;
    eprintln!("imported {} documents into {}", docs.len(), a.output.display());
    Ok(())
}

fn corpus_filter(a: FilterArgs) -> Result<()> {
    let symbols = a.symbol_set.as_deref().map(SymbolSet::from_chars).unwrap_or_default();
    if !(0.0..1.0).contains(&a.drop_top_ratio) {
        bail!("--drop-top-ratio must be in [0, 1)");
    }
    let (kept, total, body) = if a.pages {
        let pages = load_pages(&a.input)?;
        let filter = PageFilter {
            min_tokens: a.min_page_tokens,
            drop_top_ratio: a.drop_top_ratio,
            symbols,
        };
        let kept = filter_pages(&pages, &filter);
        let mut body = String::new();
        for p in &kept {
            body.push_str(&serde_json::to_string(p)?);
            body.push('\n');
        }
        (kept.len(), pages.len(), body)
    } else {
        let docs = read_corpus(&a.input)?;
        let mut kept = filter_articles(&docs, a.min_article_tokens);
        if let Some(n) = a.min_lines {
            kept = select_long_articles(&kept, n);
        }
        let mut buf = Vec::new();
        clocrc::corpus::write_corpus(&mut buf, &kept)?;
        (kept.len(), docs.len(), String::from_utf8(buf)?)
    };
    if a.dry_run {
        println!("would keep {kept} of {total} {}", if a.pages { "pages" } else { "articles" });
        return Ok(());
    }
    emit(Some(&a.output), &body)?;
    eprintln!("kept {kept} of {total}");
    Ok(())
}

fn prompts_export(a: ExportArgs) -> Result<()> {
    if a.dry_run {
        println!(
            "would export {} combined prompts and {} experiment prompts",
            COMBINED_PROMPTS.len(),
            ExperimentPrompt::ALL.len()
        );
        return Ok(());
    }
    let mut json = catalogue_json();
    if !json.ends_with('\n') {
        json.push('\n');
    }
    emit(a.output.as_deref(), &json)
}

fn run_config(a: &CorrectArgs) -> Result<RunConfig> {
    let models = if a.model.is_empty() {
        vec![default_model(&a.provider, None)?]
    } else {
        a.model.clone()
    };
    let mut cfg = RunConfig::new(models, a.prompt.clone(), a.output.clone());
    cfg.placements = a.placement.iter().map(|p| placement(p)).collect::<Result<_>>()?;
    cfg.seed = a.seed;
    cfg.temperature = a.temperature;
    cfg.max_output_tokens = a.max_tokens;
    cfg.want_logprobs = a.logprobs;
    cfg.workers = a.provider.concurrency;
    cfg.scoring = scoring(&a.scoring)?;
    Ok(cfg)
}

fn correct(a: CorrectArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let cfg = run_config(&a)?;
    if a.dry_run {
        provider_config(&a.provider)?;
        let cells = plan_cells(&cfg, &corpus)?;
        let done: std::collections::HashSet<_> = latest_rows(load_results(&cfg.output)?)
            .into_iter()
            .filter(ResultRow::is_scored)
            .map(|r| r.key())
            .collect();
        let pending = cells.iter().filter(|c| !done.contains(&c.key(&corpus))).count();
        println!(
            "plan: {} cells ({} documents x {} models x {} prompts x {} placements), {} already scored, {} to run",
            cells.len(),
            corpus.len(),
            cfg.models.len(),
            cfg.prompt_labels.len(),
            cfg.placements.len(),
            cells.len() - pending,
            pending
        );
        return Ok(());
    }
    let client = connect(&a.provider)?;
    let report = run_corrections(&cfg, &corpus, &client)?;
    eprintln!(
        "{} cells: {} skipped, {} completed, {} failed; results in {}",
        report.planned,
        report.skipped,
        report.completed,
        report.failed,
        cfg.output.display()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let scoring = scoring(&a.scoring)?;
    let (rows, label) = match (&a.hypothesis_from, &a.hypotheses) {
        (Some(HypothesisSource::Gt), _) => (
            score_hypotheses(&corpus, |d| Some(d.gt_text.clone()), a.model.as_deref().unwrap_or("gt"), &a.prompt, &scoring),
            "gt",
        ),
        (Some(HypothesisSource::Ocr), _) => (
            score_hypotheses(&corpus, |d| Some(d.ocr_text.clone()), a.model.as_deref().unwrap_or("ocr"), &a.prompt, &scoring),
            "ocr",
        ),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let hyps = parse_hypotheses(&text).with_context(|| format!("parsing {}", path.display()))?;
            let model = a.model.clone().unwrap_or_else(|| "hypotheses".into());
            (score_hypotheses(&corpus, |d| hyps.get(&d.id).cloned(), &model, &a.prompt, &scoring), "file")
        }
        (None, None) => bail!("give --hypothesis-from or --hypotheses"),
    };
    if a.dry_run {
        println!("would score {} documents from {label}", corpus.len());
        return Ok(());
    }
    let missing = rows.iter().filter(|r| r.error.as_deref() == Some("missing_hypothesis")).count();
    if missing > 0 {
        eprintln!("warning: {missing} documents have no hypothesis");
    }
    if let Some(path) = &a.output {
        let mut writer = ResultsWriter::open(path)?;
        for row in &rows {
            writer.append(row)?;
        }
    }
    let agg = aggregation(a.aggregation);
    let table = match a.format {
        ReportFormat::Markdown => summary_markdown(&rows, agg)?,
        ReportFormat::Csv => summary_csv(&rows, agg)?,
    };
    emit(None, &table)
}

fn report(a: ReportArgs) -> Result<()> {
    if !a.results.exists() {
        bail!("results file {} does not exist", a.results.display());
    }
    let rows = load_results(&a.results)?;
    let agg = aggregation(a.aggregation);
    if a.dry_run {
        let groups = if rows.is_empty() { 0 } else { summarize(&rows, agg)?.len() };
        println!("would summarize {} rows into {} groups", rows.len(), groups);
        return Ok(());
    }
    let table = match a.format {
        ReportFormat::Markdown => summary_markdown(&rows, agg)?,
        ReportFormat::Csv => summary_csv(&rows, agg)?,
    };
    emit(a.output.as_deref(), &table)
}

fn joke_prompt(p: ContextPrompt) -> ExperimentPrompt {
    match p {
        ContextPrompt::Basic => ExperimentPrompt::JokeBasic,
        ContextPrompt::Socio => ExperimentPrompt::JokeSocio,
        ContextPrompt::Mislead => ExperimentPrompt::JokeMislead,
    }
}

fn chunk_prompt(p: ContextPrompt) -> ExperimentPrompt {
    match p {
        ContextPrompt::Basic => ExperimentPrompt::ChunkBasic,
        ContextPrompt::Socio => ExperimentPrompt::ChunkSocio,
        ContextPrompt::Mislead => ExperimentPrompt::ChunkMislead,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_two_decimals).unwrap_or_else(|| "-".into())
}

fn joke(a: JokeArgs) -> Result<()> {
    let mut cfg = JokeConfig::new(default_model(&a.provider, a.model.as_ref())?);
    cfg.prompts = a.prompt.iter().map(|&p| joke_prompt(p)).collect();
    cfg.repetitions = a.repetitions;
    cfg.temperature = a.temperature;
    cfg.seed = a.seed;
    cfg.placement = placement(&a.placement)?;
    cfg.match_mode = match a.match_mode {
        MatchArg::Exact => MatchMode::Exact,
        MatchArg::Contains => MatchMode::Contains,
    };
    cfg.max_output_tokens = a.max_tokens;
    cfg.workers = a.provider.concurrency;
    if a.dry_run {
        provider_config(&a.provider)?;
        println!(
            "plan: {} requests ({} prompts x 3 phrases x {} repetitions)",
            cfg.request_count(),
            cfg.prompts.len(),
            cfg.repetitions
        );
        return Ok(());
    }
    let client = connect(&a.provider)?;
    let grid = run_joke_grid(&client, &cfg)?;
    if let Some(path) = &a.output {
        emit(Some(path), &(serde_json::to_string_pretty(&grid)? + "\n"))?;
    }
    let mut table = String::from("| Prompt | Phrase | N | Correct | Fraction | Median perplexity | Errors |\n");
    table.push_str("| --- | --- | ---: | ---: | ---: | ---: | ---: |\n");
    for c in &grid.cells {
        table.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            c.prompt.as_str(),
            c.phrase.as_str(),
            c.n,
            c.correct,
            format_two_decimals(c.fraction_correct),
            opt(c.median_perplexity),
            c.errors
        ));
    }
    emit(None, &table)
}

fn chunks(a: ChunksArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let mut cfg = TaskLengthConfig::new(default_model(&a.provider, a.model.as_ref())?);
    cfg.block_sizes = a.block_size.clone();
    cfg.prompts = a.prompt.iter().map(|&p| chunk_prompt(p)).collect();
    cfg.placement = placement(&a.placement)?;
    cfg.aggregation = aggregation(a.aggregation);
    cfg.policy = policy(&a.normalization);
    cfg.temperature = a.temperature;
    cfg.max_output_tokens = a.max_tokens;
    cfg.workers = a.provider.concurrency;
    if let Some(bad) = cfg.block_sizes.iter().find(|x| !clocrc::corpus::BLOCK_SIZES.contains(x)) {
        bail!("block size {bad} does not divide 60 (use 2, 5, 10, 15, 30 or 60)");
    }
    if a.dry_run {
        provider_config(&a.provider)?;
        println!("plan: {} chunk requests", task_length_requests(&corpus, &cfg));
        return Ok(());
    }
    let client = connect(&a.provider)?;
    let report = run_task_length(&client, &corpus, &cfg)?;
    if !report.skipped.is_empty() {
        eprintln!("skipped {} documents with fewer than 60 aligned lines", report.skipped.len());
    }
    if let Some(path) = &a.output {
        emit(Some(path), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    let mut table = String::from("| Block size | Prompt | Documents | Failed | CER |\n");
    table.push_str("| ---: | --- | ---: | ---: | ---: |\n");
    for c in &report.cells {
        table.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            c.block_size,
            c.prompt.as_str(),
            c.documents,
            c.failed_documents,
            opt(c.cer)
        ));
    }
    emit(None, &table)
}

struct Selector<'a> {
    model: Option<&'a str>,
    prompt: Option<&'a str>,
    placement: Option<Placement>,
    dataset: Option<&'a str>,
}

impl Selector<'_> {
    fn matches(&self, r: &ResultRow) -> bool {
        self.model.is_none_or(|m| r.model_id == m)
            && self.prompt.is_none_or(|p| r.prompt_label == p)
            && self.placement.is_none_or(|p| r.placement == p)
            && self.dataset.is_none_or(|d| r.dataset == d)
    }
}

fn metric_value(r: &ResultRow, m: SampleMetric) -> Option<f64> {
    match m {
        SampleMetric::Erp => r.erp,
        SampleMetric::Cer => r.cer_corrected,
        SampleMetric::CerOrig => r.cer_orig,
        SampleMetric::Cones => r.cones,
        SampleMetric::F1 => r.f1,
    }
}

fn read_values(path: &PathBuf) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_values(&text).with_context(|| format!("parsing {}", path.display()))
}

fn canonical_prompt(label: Option<&String>) -> Result<Option<String>> {
    label
        .map(|l| Ok(clocrc::prompt_builder::lookup(l).map(|p| p.label.to_owned()).unwrap_or_else(|_| l.clone())))
        .transpose()
}

fn stats_bootstrap(a: BootstrapArgs) -> Result<()> {
    let (sa, sb) = match (&a.a_values, &a.b_values, &a.results) {
        (Some(pa), Some(pb), _) => (read_values(pa)?, read_values(pb)?),
        (None, None, Some(results)) => {
            let rows = latest_rows(load_results(results)?);
            let a_prompt = canonical_prompt(a.a_prompt.as_ref())?;
            let b_prompt = canonical_prompt(a.b_prompt.as_ref().or(a.a_prompt.as_ref()))?;
            let a_place = a.a_placement.as_deref().map(placement).transpose()?;
            let b_place = a.b_placement.as_deref().map(placement).transpose()?.or(a_place);
            let sel_a = Selector {
                model: a.a_model.as_deref(),
                prompt: a_prompt.as_deref(),
                placement: a_place,
                dataset: a.dataset.as_deref(),
            };
            let sel_b = Selector {
                model: a.b_model.as_deref().or(a.a_model.as_deref()),
                prompt: b_prompt.as_deref(),
                placement: b_place,
                dataset: a.dataset.as_deref(),
            };
            if a.b_model.is_none() && a.b_prompt.is_none() && a.b_placement.is_none() {
                bail!("the two samples select the same rows; set at least one --b-* option");
            }
            let pick = |s: &Selector| rows.iter().filter(|r| s.matches(r)).filter_map(|r| metric_value(r, a.metric)).collect::<Vec<_>>();
            (pick(&sel_a), pick(&sel_b))
        }
        _ => bail!("give --results with --a-*/--b-* selectors, or both --a-values and --b-values"),
    };
    if a.dry_run {
        println!("would test {} vs {} values with {} resamples", sa.len(), sb.len(), a.resamples);
        return Ok(());
    }
    let result = bootstrap_test(&sa, &sb, a.resamples, a.seed)?;
    let out = serde_json::json!({
        "n_a": sa.len(),
        "n_b": sb.len(),
        "statistic": result.statistic,
        "p_value": result.p_value,
        "resamples": result.resamples,
        "seed": a.seed,
    });
    emit(None, &(serde_json::to_string_pretty(&out)? + "\n"))
}
