//! Entity-level comparison of a corrected text with its reference: CoNES
//! (cosine of entity count vectors) and a position-windowed F1.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum EntityType {
    Per,
    Loc,
    Org,
    Misc,
    Other(String),
}

impl From<String> for EntityType {
    fn from(label: String) -> Self {
        match label.trim().to_ascii_uppercase().as_str() {
            "PER" | "PERSON" => Self::Per,
            "LOC" | "LOCATION" => Self::Loc,
            "ORG" | "ORGANIZATION" | "ORGANISATION" => Self::Org,
            "MISC" => Self::Misc,
            _ => Self::Other(label.trim().to_owned()),
        }
    }
}

impl From<&str> for EntityType {
    fn from(label: &str) -> Self {
        Self::from(label.to_owned())
    }
}

impl From<EntityType> for String {
    fn from(t: EntityType) -> Self {
        t.to_string()
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Per => f.write_str("PER"),
            Self::Loc => f.write_str("LOC"),
            Self::Org => f.write_str("ORG"),
            Self::Misc => f.write_str("MISC"),
            Self::Other(label) => f.write_str(label),
        }
    }
}

/// One entity occurrence. `start` is a 0-based offset in Unicode scalar
/// values into the text the mention was extracted from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub start: usize,
}

impl EntityMention {
    pub fn new(surface: impl Into<String>, etype: impl Into<EntityType>, start: usize) -> Self {
        Self {
            surface: surface.into(),
            etype: etype.into(),
            start,
        }
    }

    pub fn key(&self, keying: EntityKeying) -> EntityKey {
        EntityKey {
            surface: normalize_surface(&self.surface),
            etype: match keying {
                EntityKeying::SurfaceAndType => Some(self.etype.clone()),
                EntityKeying::SurfaceOnly => None,
            },
        }
    }
}

/// Whether entity identity includes the entity type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntityKeying {
    #[default]
    SurfaceAndType,
    SurfaceOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityKey {
    pub surface: String,
    pub etype: Option<EntityType>,
}

/// Case-folds and collapses internal whitespace.
pub fn normalize_surface(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Count vectors over the union of entity keys seen in either text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityVectors {
    pub union_set: Vec<EntityKey>,
    pub predicted: Vec<u64>,
    pub reference: Vec<u64>,
}

pub fn build_vectors(pred: &[EntityMention], reference: &[EntityMention]) -> EntityVectors {
    build_vectors_keyed(pred, reference, EntityKeying::default())
}

pub fn build_vectors_keyed(
    pred: &[EntityMention],
    reference: &[EntityMention],
    keying: EntityKeying,
) -> EntityVectors {
    let mut counts: BTreeMap<EntityKey, (u64, u64)> = BTreeMap::new();
    for m in pred {
        counts.entry(m.key(keying)).or_default().0 += 1;
    }
    for m in reference {
        counts.entry(m.key(keying)).or_default().1 += 1;
    }
    let mut vectors = EntityVectors {
        union_set: Vec::with_capacity(counts.len()),
        predicted: Vec::with_capacity(counts.len()),
        reference: Vec::with_capacity(counts.len()),
    };
    for (key, (p, r)) in counts {
        vectors.union_set.push(key);
        vectors.predicted.push(p);
        vectors.reference.push(r);
    }
    vectors
}

/// Cosine similarity of the two count vectors.
///
/// Two entity-free texts score 1; exactly one entity-free text scores 0.
pub fn cones(vectors: &EntityVectors) -> f64 {
    let dot: f64 = vectors
        .predicted
        .iter()
        .zip(&vectors.reference)
        .map(|(&p, &r)| p as f64 * r as f64)
        .sum();
    // squared norms are exact for integer counts, so parallel vectors
    // give exactly 1 after a single rounding in the square root
    let sq = |v: &[u64]| v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>();
    let sp = sq(&vectors.predicted);
    let sr = sq(&vectors.reference);
    match (sp == 0.0, sr == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (dot / (sp * sr).sqrt()).min(1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
}

pub const DEFAULT_F1_WINDOW: usize = 10;

/// Entity F1 where a predicted mention only counts if a reference mention
/// with the same key starts within `window` characters of it.
///
/// Matching is one-to-one. Within each key, references are visited in
/// offset order and each takes the earliest still-unmatched prediction
/// inside its window. Every window has the same width, so this sweep finds
/// a maximum-cardinality matching.
pub fn windowed_f1(pred: &[EntityMention], reference: &[EntityMention], window: usize) -> F1Score {
    windowed_f1_keyed(pred, reference, window, EntityKeying::default())
}

pub fn windowed_f1_keyed(
    pred: &[EntityMention],
    reference: &[EntityMention],
    window: usize,
    keying: EntityKeying,
) -> F1Score {
    if pred.is_empty() && reference.is_empty() {
        return F1Score {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            matched: 0,
        };
    }

    let mut groups: BTreeMap<EntityKey, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for m in pred {
        groups.entry(m.key(keying)).or_default().0.push(m.start);
    }
    for m in reference {
        groups.entry(m.key(keying)).or_default().1.push(m.start);
    }

    let mut matched = 0;
    for (_, (mut preds, mut refs)) in groups {
        preds.sort_unstable();
        refs.sort_unstable();
        let mut next = 0;
        for r in refs {
            while next < preds.len() && preds[next] + window < r {
                next += 1;
            }
            if next < preds.len() && preds[next] <= r + window {
                matched += 1;
                next += 1;
            }
        }
    }

    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let precision = ratio(matched, pred.len());
    let recall = ratio(matched, reference.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    F1Score {
        precision,
        recall,
        f1,
        matched,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(s: &str, t: &str, start: usize) -> EntityMention {
        EntityMention::new(s, t, start)
    }

    #[test]
    fn vectors_for_identical_lists() {
        let l = vec![m("Jim", "PER", 0), m("London", "LOC", 9)];
        let v = build_vectors(&l, &l);
        assert_eq!(v.union_set.len(), 2);
        assert_eq!(v.predicted, vec![1, 1]);
        assert_eq!(v.reference, vec![1, 1]);
    }

    #[test]
    fn vectors_with_missing_prediction() {
        let v = build_vectors(&[], &[m("Jim", "PER", 0)]);
        assert_eq!(v.predicted, vec![0]);
        assert_eq!(v.reference, vec![1]);
    }

    #[test]
    fn duplicates_are_counted() {
        let v = build_vectors(&[m("Jim", "PER", 0), m("Jim", "PER", 8)], &[m("Jim", "PER", 3)]);
        assert_eq!(v.predicted, vec![2]);
        assert_eq!(v.reference, vec![1]);
    }

    #[test]
    fn key_folds_case_and_whitespace() {
        let v = build_vectors(&[m("NEW  york", "LOC", 0)], &[m("New York", "LOC", 0)]);
        assert_eq!(v.union_set.len(), 1);
        let w = build_vectors(&[m("Paris", "PER", 0)], &[m("Paris", "LOC", 0)]);
        assert_eq!(w.union_set.len(), 2);
        let x = build_vectors_keyed(&[m("Paris", "PER", 0)], &[m("Paris", "LOC", 0)], EntityKeying::SurfaceOnly);
        assert_eq!(x.union_set.len(), 1);
    }

    #[test]
    fn cones_degenerate_cases() {
        assert_eq!(cones(&build_vectors(&[], &[])), 1.0);
        assert_eq!(cones(&build_vectors(&[m("a", "PER", 0)], &[])), 0.0);
        assert_eq!(cones(&build_vectors(&[m("a", "PER", 0)], &[m("b", "PER", 0)])), 0.0);
    }

    #[test]
    fn cones_half_overlap() {
        let v = EntityVectors {
            union_set: vec![],
            predicted: vec![1, 0],
            reference: vec![1, 1],
        };
        assert!((cones(&v) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn f1_identity_and_shift() {
        let l = vec![m("Jim", "PER", 20), m("London", "LOC", 29)];
        assert_eq!(windowed_f1(&l, &l, 0).f1, 1.0);

        let shifted = vec![m("Jim", "PER", 44), m("London", "LOC", 75)];
        assert_eq!(windowed_f1(&shifted, &l, 10).f1, 0.0);
    }

    #[test]
    fn f1_partial_recall() {
        let pred = vec![m("Jim", "PER", 5)];
        let reference = vec![m("Jim", "PER", 0), m("London", "LOC", 40)];
        let s = windowed_f1(&pred, &reference, 10);
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.5);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn f1_one_side_empty() {
        let s = windowed_f1(&[], &[m("Jim", "PER", 0)], 10);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sweep_beats_nearest_gap_greedy() {
        // nearest-gap greedy would pair pred@5 with ref@3 and strand both others
        let pred = vec![m("x", "PER", 0), m("x", "PER", 5)];
        let reference = vec![m("x", "PER", 3), m("x", "PER", 11)];
        assert_eq!(windowed_f1(&pred, &reference, 7).matched, 2);
    }

    proptest! {
        #[test]
        fn cones_symmetric_and_bounded(p in proptest::collection::vec(0u64..5, 1..8), r in proptest::collection::vec(0u64..5, 1..8)) {
            let n = p.len().min(r.len());
            let a = EntityVectors { union_set: vec![], predicted: p[..n].to_vec(), reference: r[..n].to_vec() };
            let b = EntityVectors { union_set: vec![], predicted: r[..n].to_vec(), reference: p[..n].to_vec() };
            let (ca, cb) = (cones(&a), cones(&b));
            prop_assert!((ca - cb).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ca));
        }
    }
}
