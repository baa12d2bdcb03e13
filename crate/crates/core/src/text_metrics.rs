//! Character-level edit alignment, CER and ERP.
//!
//! Characters are Unicode scalar values of the policy-normalized text. The
//! alignment is plain Levenshtein with unit costs, counted against the
//! reference: `S + D + C` is always the reference length.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("reference text is empty after normalization")]
    EmptyReference,
    #[error("original CER is zero; ERP is undefined")]
    ZeroOriginalError,
    #[error("cannot aggregate an empty list of values")]
    EmptyInput,
}

/// Counts of edit operations in a minimal alignment of a hypothesis against a
/// reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOps {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub correct: usize,
}

impl EditOps {
    pub fn distance(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    pub fn reference_len(&self) -> usize {
        self.substitutions + self.deletions + self.correct
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CerValue(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ErpValue(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnicodeForm {
    None,
    #[default]
    CanonicalComposed,
}

/// How texts are normalized before alignment.
///
/// The default composes to NFC and collapses whitespace runs (newlines
/// included) to a single space, trimming the ends. Case is preserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub unicode_form: UnicodeForm,
    pub collapse_whitespace: bool,
    pub case_fold: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self {
            unicode_form: UnicodeForm::CanonicalComposed,
            collapse_whitespace: true,
            case_fold: false,
        }
    }
}

impl NormalizationPolicy {
    /// No normalization at all; texts are compared scalar by scalar.
    pub fn raw() -> Self {
        Self {
            unicode_form: UnicodeForm::None,
            collapse_whitespace: false,
            case_fold: false,
        }
    }

    pub fn apply(&self, text: &str) -> String {
        let mut out = if self.case_fold {
            text.to_lowercase()
        } else {
            text.to_owned()
        };
        if self.unicode_form == UnicodeForm::CanonicalComposed {
            out = out.nfc().collect();
        }
        if self.collapse_whitespace {
            out = out.split_whitespace().collect::<Vec<_>>().join(" ");
        }
        out
    }
}

/// Aligns `hypothesis` against `reference` (both taken as-is) and returns
/// the operation counts of a minimal decomposition.
///
/// Among equal-cost predecessors the diagonal (match/substitution) is taken
/// first, then deletion, then insertion. Counts are carried forward in two
/// rows, which yields the same split as a full-matrix backtrace with that
/// preference while using `O(len(hypothesis))` memory.
pub fn align_ops(reference: &str, hypothesis: &str) -> Result<EditOps, MetricError> {
    let r: Vec<char> = reference.chars().collect();
    if r.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let h: Vec<char> = hypothesis.chars().collect();
    Ok(align_chars(&r, &h))
}

#[derive(Clone, Copy, Default)]
struct Cell {
    cost: u32,
    subs: u32,
    dels: u32,
    ins: u32,
}

fn align_chars(r: &[char], h: &[char]) -> EditOps {
    let m = h.len();
    let mut prev: Vec<Cell> = (0..=m)
        .map(|j| Cell {
            cost: j as u32,
            ins: j as u32,
            ..Cell::default()
        })
        .collect();
    let mut curr = vec![Cell::default(); m + 1];

    for (i, &rc) in r.iter().enumerate() {
        curr[0] = Cell {
            cost: (i + 1) as u32,
            dels: (i + 1) as u32,
            ..Cell::default()
        };
        for j in 1..=m {
            let mismatch = u32::from(rc != h[j - 1]);
            let diag = prev[j - 1].cost + mismatch;
            let del = prev[j].cost + 1;
            let ins = curr[j - 1].cost + 1;
            curr[j] = if diag <= del && diag <= ins {
                let mut c = prev[j - 1];
                c.cost = diag;
                c.subs += mismatch;
                c
            } else if del <= ins {
                let mut c = prev[j];
                c.cost = del;
                c.dels += 1;
                c
            } else {
                let mut c = curr[j - 1];
                c.cost = ins;
                c.ins += 1;
                c
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }

    let last = prev[m];
    let substitutions = last.subs as usize;
    let deletions = last.dels as usize;
    EditOps {
        substitutions,
        deletions,
        insertions: last.ins as usize,
        correct: r.len() - substitutions - deletions,
    }
}

/// Character error rate of `hypothesis` against `reference` after applying
/// `policy` to both.
pub fn cer(
    reference: &str,
    hypothesis: &str,
    policy: &NormalizationPolicy,
) -> Result<CerValue, MetricError> {
    let ops = align_ops(&policy.apply(reference), &policy.apply(hypothesis))?;
    Ok(CerValue(ops.distance() as f64 / ops.reference_len() as f64))
}

/// Error reduction percentage. Negative when the correction made things worse.
pub fn erp(cer_orig: CerValue, cer_corrected: CerValue) -> Result<ErpValue, MetricError> {
    if cer_orig.0 <= 0.0 {
        return Err(MetricError::ZeroOriginalError);
    }
    Ok(ErpValue((cer_orig.0 - cer_corrected.0) / cer_orig.0 * 100.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Median,
    Mean,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(Self::Median),
            "mean" => Ok(Self::Mean),
            other => Err(format!("unknown aggregation mode `{other}`")),
        }
    }
}

pub fn aggregate(values: &[f64], mode: Aggregation) -> Result<f64, MetricError> {
    if values.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(match mode {
        Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Aggregation::Median => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mid = sorted.len() / 2;
            if sorted.len() % 2 == 1 {
                sorted[mid]
            } else {
                (sorted[mid - 1] + sorted[mid]) / 2.0
            }
        }
    })
}

/// Rounds to `decimals` places, halves away from zero.
///
/// The value is first snapped to 9 significant decimals past the target so
/// that binary representations like `1.005` still round up.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = value * scale;
    let snapped = (scaled * 1e9).round() / 1e9;
    snapped.round() / scale
}

pub fn format_two_decimals(value: f64) -> String {
    let rounded = round_half_up(value, 2);
    // avoid "-0.00"
    if rounded == 0.0 {
        "0.00".to_owned()
    } else {
        format!("{rounded:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full_matrix_distance(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn identity_alignment() {
        let ops = align_ops("abc", "abc").unwrap();
        assert_eq!(
            ops,
            EditOps {
                substitutions: 0,
                deletions: 0,
                insertions: 0,
                correct: 3
            }
        );
    }

    #[test]
    fn total_deletion() {
        let ops = align_ops("ab", "").unwrap();
        assert_eq!((ops.substitutions, ops.deletions, ops.insertions, ops.correct), (0, 2, 0, 0));
    }

    #[test]
    fn kitten_sitting() {
        let ops = align_ops("kitten", "sitting").unwrap();
        assert_eq!(ops.distance(), full_matrix_distance("kitten", "sitting"));
        assert_eq!(ops.distance(), 3);
        assert_eq!((ops.substitutions, ops.insertions), (2, 1));
    }

    #[test]
    fn substitution_preferred_over_delete_insert() {
        let ops = align_ops("ab", "ba").unwrap();
        assert_eq!(ops.distance(), 2);
        assert_eq!(ops.substitutions, 2);
    }

    #[test]
    fn empty_reference_rejected() {
        assert_eq!(align_ops("", "x"), Err(MetricError::EmptyReference));
        let p = NormalizationPolicy::default();
        assert_eq!(cer("  \n ", "x", &p), Err(MetricError::EmptyReference));
    }

    #[test]
    fn cer_named_entity_rows() {
        let p = NormalizationPolicy::default();
        let a = cer("Jane Austen", "Jane Austin", &p).unwrap().0;
        assert!((a - 0.09).abs() <= 0.005, "{a}");
        let b = cer("Ada Lovelace", "Ada Loveslace", &p).unwrap().0;
        assert!((b - 0.08).abs() <= 0.005, "{b}");
    }

    #[test]
    fn cer_can_exceed_one() {
        let p = NormalizationPolicy::default();
        let v = cer("ab", "xxxxxx", &p).unwrap().0;
        assert!(v > 1.0);
    }

    #[test]
    fn whitespace_collapse_ignores_line_wrapping() {
        let p = NormalizationPolicy::default();
        assert_eq!(cer("one two\nthree", "one  two three\n", &p).unwrap().0, 0.0);
        assert!(cer("Case", "case", &p).unwrap().0 > 0.0);
    }

    #[test]
    fn nfc_composes_decomposed_input() {
        let p = NormalizationPolicy::default();
        assert_eq!(cer("caf\u{e9}", "cafe\u{301}", &p).unwrap().0, 0.0);
        assert!(cer("caf\u{e9}", "cafe\u{301}", &NormalizationPolicy::raw()).unwrap().0 > 0.0);
    }

    #[test]
    fn erp_examples() {
        assert!((erp(CerValue(0.10), CerValue(0.05)).unwrap().0 - 50.0).abs() < 1e-9);
        assert_eq!(erp(CerValue(0.10), CerValue(0.10)).unwrap().0, 0.0);
        assert!((erp(CerValue(0.10), CerValue(0.15)).unwrap().0 + 50.0).abs() < 1e-9);
        assert_eq!(erp(CerValue(0.0), CerValue(0.1)), Err(MetricError::ZeroOriginalError));
    }

    #[test]
    fn erp_is_affine_in_corrected_cer() {
        let orig = CerValue(0.37);
        let pts: Vec<(f64, f64)> = [0.0, 0.2, 1.3]
            .iter()
            .map(|&c| (c, erp(orig, CerValue(c)).unwrap().0))
            .collect();
        for w in pts.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            assert!((slope + 100.0 / orig.0).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[1.0, 2.0, 100.0], Aggregation::Median).unwrap(), 2.0);
        assert_eq!(aggregate(&[1.0, 2.0, 3.0, 100.0], Aggregation::Median).unwrap(), 2.5);
        let mean = aggregate(&[1.0, 2.0, 100.0], Aggregation::Mean).unwrap();
        assert!((mean - 103.0 / 3.0).abs() < 1e-12);
        assert_eq!(aggregate(&[], Aggregation::Mean), Err(MetricError::EmptyInput));
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(format_two_decimals(1.005), "1.01");
        assert_eq!(format_two_decimals(0.125), "0.13");
        assert_eq!(format_two_decimals(-0.001), "0.00");
        assert_eq!(format_two_decimals(343.3333), "343.33");
        assert_eq!(format_two_decimals(100.0), "100.00");
    }

    proptest! {
        #[test]
        fn distance_matches_full_matrix(a in "[abcd]{0,64}", b in "[abcd]{0,64}") {
            prop_assume!(!a.is_empty());
            let ops = align_ops(&a, &b).unwrap();
            prop_assert_eq!(ops.distance(), full_matrix_distance(&a, &b));
            prop_assert_eq!(ops.reference_len(), a.chars().count());
        }

        #[test]
        fn zero_cer_iff_equal(a in "[ab \n]{1,20}", b in "[ab \n]{0,20}") {
            let p = NormalizationPolicy::default();
            let na = p.apply(&a);
            prop_assume!(!na.is_empty());
            let v = cer(&a, &b, &p).unwrap().0;
            prop_assert_eq!(v == 0.0, na == p.apply(&b));
        }

        #[test]
        fn normalization_idempotent(s in "\\PC{0,40}", fold in any::<bool>(), ws in any::<bool>()) {
            let p = NormalizationPolicy { case_fold: fold, collapse_whitespace: ws, ..Default::default() };
            let once = p.apply(&s);
            prop_assert_eq!(p.apply(&once), once);
        }

        #[test]
        fn median_robust_to_inflating_upper_values(
            mut v in proptest::collection::vec(-1e3f64..1e3, 1..30),
            idx in any::<proptest::sample::Index>(),
            bump in 0.0f64..1e6,
        ) {
            let med = aggregate(&v, Aggregation::Median).unwrap();
            let mut rev = v.clone();
            rev.reverse();
            prop_assert_eq!(aggregate(&rev, Aggregation::Median).unwrap(), med);
            // for even counts the upper middle element also moves the median
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let upper_mid = sorted[v.len() / 2];
            let i = idx.index(v.len());
            if v[i] > upper_mid {
                v[i] += bump;
                prop_assert_eq!(aggregate(&v, Aggregation::Median).unwrap(), med);
            }
        }
    }
}
