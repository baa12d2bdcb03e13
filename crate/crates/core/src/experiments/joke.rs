use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{aborts_run, ExperimentError};
use crate::llm_client::{map_ordered, perplexity, ChatRequest, Client, RecordMeta, DEFAULT_MAX_OUTPUT_TOKENS, JOKE_TEMPERATURE};
use crate::prompt_builder::{experiment_prompts, render_text, ExperimentPrompt, Placement};
use crate::text_metrics::{aggregate, Aggregation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JokePhrase {
    Setup,
    Punchline,
    Full,
}

const SETUP: &str = "*** did the *** *** *** ***";
const PUNCHLINE: &str = "*** *** *** *** other side";

impl JokePhrase {
    pub const ALL: [JokePhrase; 3] = [Self::Setup, Self::Punchline, Self::Full];

    /// The masked text sent for correction.
    pub fn corrupted(self) -> String {
        match self {
            Self::Setup => SETUP.to_owned(),
            Self::Punchline => PUNCHLINE.to_owned(),
            Self::Full => format!("{SETUP} {PUNCHLINE}"),
        }
    }

    pub fn answer(self) -> &'static str {
        match self {
            Self::Setup => "Why did the chicken cross the road?",
            Self::Punchline => "To get to the other side",
            Self::Full => "Why did the chicken cross the road? To get to the other side",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Setup => "setup",
            Self::Punchline => "punchline",
            Self::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// The whole normalized response equals the normalized answer.
    #[default]
    Exact,
    /// The normalized answer appears as a run of whole words.
    Contains,
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "contains" => Ok(Self::Contains),
            other => Err(format!("unknown match mode `{other}` (expected exact or contains)")),
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Contains => "contains",
        })
    }
}

/// Lower-cases, drops punctuation and collapses whitespace.
pub fn normalize_answer(text: &str) -> String {
    let kept: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl MatchMode {
    pub fn is_match(self, response: &str, answer: &str) -> bool {
        let (resp, ans) = (normalize_answer(response), normalize_answer(answer));
        match self {
            Self::Exact => resp == ans,
            Self::Contains => format!(" {resp} ").contains(&format!(" {ans} ")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JokeConfig {
    pub model_id: String,
    pub prompts: Vec<ExperimentPrompt>,
    pub repetitions: usize,
    pub temperature: f64,
    pub seed: u64,
    pub placement: Placement,
    pub match_mode: MatchMode,
    pub workers: Option<usize>,
    pub max_output_tokens: u32,
}

impl JokeConfig {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            prompts: vec![ExperimentPrompt::JokeBasic, ExperimentPrompt::JokeSocio, ExperimentPrompt::JokeMislead],
            repetitions: 100,
            temperature: JOKE_TEMPERATURE,
            seed: 0,
            placement: Placement::SystemMessage,
            match_mode: MatchMode::Exact,
            workers: None,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }

    /// Number of requests the grid issues.
    pub fn request_count(&self) -> usize {
        self.prompts.len() * JokePhrase::ALL.len() * self.repetitions
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JokeTrial {
    pub prompt: ExperimentPrompt,
    pub phrase: JokePhrase,
    pub repetition: usize,
    pub response: Option<String>,
    pub correct: bool,
    pub perplexity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JokeCell {
    pub prompt: ExperimentPrompt,
    pub phrase: JokePhrase,
    pub n: usize,
    pub correct: usize,
    /// `correct / n`; failed requests count as incorrect.
    pub fraction_correct: f64,
    /// Over responses that carried log probabilities.
    pub median_perplexity: Option<f64>,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JokeGridResult {
    pub cells: Vec<JokeCell>,
    pub trials: Vec<JokeTrial>,
}

/// Sends every (prompt, phrase) pair `repetitions` times. Repetition `r`
/// carries seed `seed + r` for providers that accept one.
pub fn run_joke_grid(client: &Client, config: &JokeConfig) -> Result<JokeGridResult, ExperimentError> {
    if config.repetitions == 0 {
        return Err(ExperimentError::InvalidParam("repetitions must be at least 1".into()));
    }
    if let Some(bad) = config.prompts.iter().find(|p| p.as_str().starts_with("chunk")) {
        return Err(ExperimentError::InvalidParam(format!("`{}` is not a joke prompt", bad.as_str())));
    }
    let mut plan = Vec::with_capacity(config.request_count());
    for &prompt in &config.prompts {
        for phrase in JokePhrase::ALL {
            for rep in 0..config.repetitions {
                plan.push((prompt, phrase, rep));
            }
        }
    }
    let workers = config.workers.unwrap_or(client.config().max_concurrency).max(1);
    let mut trials = Vec::with_capacity(plan.len());
    let run = |&(prompt, phrase, rep): &(ExperimentPrompt, JokePhrase, usize)| {
        let rendered = render_text(&phrase.corrupted(), &experiment_prompts(prompt), config.placement)
            .expect("corrupted phrases are non-empty");
        let mut req = ChatRequest::from_rendered(&config.model_id, rendered);
        req.temperature = config.temperature;
        req.max_output_tokens = config.max_output_tokens;
        req.want_logprobs = true;
        req.seed = Some(config.seed.wrapping_add(rep as u64));
        let meta = RecordMeta {
            doc_id: format!("{}/{}", prompt.as_str(), phrase.as_str()),
            prompt_label: prompt.as_str().to_owned(),
            placement: config.placement,
        };
        (prompt, phrase, rep, client.complete(&req, meta))
    };
    map_ordered(&plan, workers, run, |_, (prompt, phrase, repetition, outcome)| {
        let trial = match outcome {
            Ok(record) => JokeTrial {
                prompt,
                phrase,
                repetition,
                correct: config.match_mode.is_match(&record.corrected_text, phrase.answer()),
                perplexity: record.token_logprobs.as_deref().and_then(|lp| perplexity(lp).ok()),
                response: Some(record.corrected_text),
                error: None,
            },
            Err(failure) => {
                if aborts_run(&failure.error) {
                    return Err(ExperimentError::Aborted {
                        doc_id: format!("{}/{}", prompt.as_str(), phrase.as_str()),
                        error: failure.error,
                    });
                }
                JokeTrial {
                    prompt,
                    phrase,
                    repetition,
                    response: None,
                    correct: false,
                    perplexity: None,
                    error: Some(failure.error.tag()),
                }
            }
        };
        trials.push(trial);
        Ok(())
    })?;

    let cells = trials
        .chunks(config.repetitions)
        .map(|group| {
            let correct = group.iter().filter(|t| t.correct).count();
            let ppl: Vec<f64> = group.iter().filter_map(|t| t.perplexity).collect();
            JokeCell {
                prompt: group[0].prompt,
                phrase: group[0].phrase,
                n: group.len(),
                correct,
                fraction_correct: correct as f64 / group.len() as f64,
                median_perplexity: aggregate(&ppl, Aggregation::Median).ok(),
                errors: group.iter().filter(|t| t.error.is_some()).count(),
            }
        })
        .collect();
    Ok(JokeGridResult { cells, trials })
}
