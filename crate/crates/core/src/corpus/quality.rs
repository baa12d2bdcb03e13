//! Scan-quality heuristics used when sampling pages and articles.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, DocumentPair};

pub const DEFAULT_MIN_PAGE_TOKENS: usize = 500;
pub const DEFAULT_MIN_ARTICLE_TOKENS: usize = 100;
pub const DEFAULT_DROP_TOP_RATIO: f64 = 0.10;

/// Characters counted as OCR noise. `>>` counts as two `>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSet(HashSet<char>);

impl Default for SymbolSet {
    fn default() -> Self {
        Self(
            [':', ';', '-', '_', '+', '*', '^', '|', '¦', '\'', '!', '/', '>', ']', '[']
                .into_iter()
                .collect(),
        )
    }
}

impl SymbolSet {
    /// Every non-whitespace character of `chars` becomes a symbol.
    pub fn from_chars(chars: &str) -> Self {
        Self(chars.chars().filter(|c| !c.is_whitespace()).collect())
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityStats {
    pub token_count: usize,
    pub symbol_count: usize,
    pub symbol_token_ratio: f64,
}

pub fn quality_stats(text: &str, symbols: &SymbolSet) -> Result<QualityStats, CorpusError> {
    let token_count = text.split_whitespace().count();
    if token_count == 0 {
        return Err(CorpusError::EmptyText);
    }
    let symbol_count = text.chars().filter(|&c| symbols.contains(c)).count();
    Ok(QualityStats {
        token_count,
        symbol_count,
        symbol_token_ratio: symbol_count as f64 / token_count as f64,
    })
}

fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A scanned page prior to transcription.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub id: String,
    #[serde(default)]
    pub periodical: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct PageFilter {
    pub min_tokens: usize,
    /// Fraction of highest-ratio pages to drop within each periodical.
    pub drop_top_ratio: f64,
    pub symbols: SymbolSet,
}

impl Default for PageFilter {
    fn default() -> Self {
        Self {
            min_tokens: DEFAULT_MIN_PAGE_TOKENS,
            drop_top_ratio: DEFAULT_DROP_TOP_RATIO,
            symbols: SymbolSet::default(),
        }
    }
}

/// Drops pages under the token minimum, then, per periodical, pages whose
/// symbol ratio is strictly above the nearest-rank `1 - drop_top_ratio`
/// percentile of that periodical's remaining pages. Input order is kept.
pub fn filter_pages(pages: &[Page], filter: &PageFilter) -> Vec<Page> {
    let candidates: Vec<(usize, f64)> = pages
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let stats = quality_stats(&p.text, &filter.symbols).ok()?;
            (stats.token_count >= filter.min_tokens).then_some((i, stats.symbol_token_ratio))
        })
        .collect();

    let mut groups: BTreeMap<Option<&str>, Vec<f64>> = BTreeMap::new();
    for &(i, ratio) in &candidates {
        groups.entry(pages[i].periodical.as_deref()).or_default().push(ratio);
    }
    let thresholds: BTreeMap<Option<&str>, f64> = groups
        .into_iter()
        .map(|(k, mut ratios)| {
            ratios.sort_by(f64::total_cmp);
            (k, nearest_rank(&ratios, 1.0 - filter.drop_top_ratio))
        })
        .collect();

    candidates
        .into_iter()
        .filter(|&(i, ratio)| ratio <= thresholds[&pages[i].periodical.as_deref()])
        .map(|(i, _)| pages[i].clone())
        .collect()
}

fn nearest_rank(sorted: &[f64], quantile: f64) -> f64 {
    let n = sorted.len();
    let rank = ((quantile.clamp(0.0, 1.0) * n as f64) - 1e-9).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn filter_articles(articles: &[DocumentPair], min_tokens: usize) -> Vec<DocumentPair> {
    articles
        .iter()
        .filter(|a| token_count(&a.ocr_text) >= min_tokens)
        .cloned()
        .collect()
}

pub fn parse_pages(text: &str) -> Result<Vec<Page>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_pages(path: &Path) -> Result<Vec<Page>, CorpusError> {
    parse_pages(&std::fs::read_to_string(path)?)
}
