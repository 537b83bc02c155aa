//! Relations, thresholds and join results shared by every operator.
//!
//! Tuples are addressed by dense 0-based `u64` offsets. A [`RawRelation`] keeps
//! the original tokens so any offset produced by a join can be decoded back to
//! its string; an [`EmbeddedRelation`] is the row-major fp32 matrix the
//! operators actually work on.

use crate::error::{Error, Result};

/// Tuple offset within a relation.
pub type Offset = u64;

/// Ordered collection of context-rich tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRelation {
    name: String,
    tokens: Vec<String>,
}

impl RawRelation {
    pub fn new<S, I, T>(name: S, tokens: I) -> Self
    where
        S: Into<String>,
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        RawRelation {
            name: name.into(),
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, offset: Offset) -> Option<&str> {
        usize::try_from(offset)
            .ok()
            .and_then(|i| self.tokens.get(i))
            .map(String::as_str)
    }
}

/// `make_raw_relation`: offsets follow input order.
pub fn make_raw_relation<I, T>(name: &str, tokens: I) -> RawRelation
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    RawRelation::new(name, tokens)
}

/// Dense row-major `len × dim` matrix of embeddings, one row per tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedRelation {
    data: Vec<f32>,
    dim: usize,
    normalized: bool,
    source_name: String,
}

impl EmbeddedRelation {
    pub fn from_rows(source_name: impl Into<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dim must be positive".into(),
            ));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                left: data.len() % dim,
                right: dim,
            });
        }
        Ok(EmbeddedRelation {
            data,
            dim,
            normalized: false,
            source_name: source_name.into(),
        })
    }

    pub(crate) fn from_parts(
        source_name: String,
        dim: usize,
        data: Vec<f32>,
        normalized: bool,
    ) -> Self {
        debug_assert!(dim > 0 && data.len().is_multiple_of(dim));
        EmbeddedRelation {
            data,
            dim,
            normalized,
            source_name,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub(crate) fn set_normalized(&mut self, normalized: bool) {
        self.normalized = normalized;
    }

    /// Row `i`, occupying `[i·dim, (i+1)·dim)` of the backing storage.
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }
}

/// Similarity threshold θ in `[-1, 1]`. A pair matches iff `similarity >= θ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f32);

impl Threshold {
    pub fn new(value: f32) -> Result<Self> {
        if (-1.0..=1.0).contains(&value) {
            Ok(Threshold(value))
        } else {
            Err(Error::ThresholdOutOfRange(value))
        }
    }

    pub fn value(self) -> f32 {
        self.0
    }

    #[inline]
    pub fn accepts(self, similarity: f32) -> bool {
        similarity >= self.0
    }
}

impl TryFrom<f32> for Threshold {
    type Error = Error;

    fn try_from(value: f32) -> Result<Self> {
        Threshold::new(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub left: Offset,
    pub right: Offset,
    pub similarity: f32,
}

impl Match {
    pub fn new(left: Offset, right: Offset, similarity: f32) -> Self {
        Match {
            left,
            right,
            similarity,
        }
    }
}

/// Sparse join result with global tuple offsets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchSet {
    pub matches: Vec<Match>,
    pub left_name: String,
    pub right_name: String,
}

impl MatchSet {
    pub fn new(left_name: impl Into<String>, right_name: impl Into<String>) -> Self {
        MatchSet {
            matches: Vec::new(),
            left_name: left_name.into(),
            right_name: right_name.into(),
        }
    }

    pub fn from_matches(
        left_name: impl Into<String>,
        right_name: impl Into<String>,
        matches: Vec<Match>,
    ) -> Self {
        MatchSet {
            matches,
            left_name: left_name.into(),
            right_name: right_name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Match> {
        self.matches.iter()
    }

    /// `(left, right)` pairs in stored order.
    pub fn pairs(&self) -> Vec<(Offset, Offset)> {
        self.matches.iter().map(|m| (m.left, m.right)).collect()
    }

    /// True when both sets hold the same pairs in the same order with
    /// bit-identical similarities.
    pub fn bitwise_eq(&self, other: &MatchSet) -> bool {
        self.matches.len() == other.matches.len()
            && self.matches.iter().zip(&other.matches).all(|(a, b)| {
                a.left == b.left
                    && a.right == b.right
                    && a.similarity.to_bits() == b.similarity.to_bits()
            })
    }

    pub fn is_canonical(&self) -> bool {
        self.matches
            .windows(2)
            .all(|w| (w[0].left, w[0].right) < (w[1].left, w[1].right))
    }
}

/// Sorts by `(left, right)` and drops later duplicates of a pair.
pub fn canonicalize(mut m: MatchSet) -> MatchSet {
    canonicalize_in_place(&mut m.matches);
    m
}

pub(crate) fn canonicalize_in_place(matches: &mut Vec<Match>) {
    // stable: the first occurrence of a duplicate pair stays in front
    matches.sort_by_key(|m| (m.left, m.right));
    matches.dedup_by_key(|m| (m.left, m.right));
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(v: &[(u64, u64, f32)]) -> MatchSet {
        MatchSet::from_matches(
            "R",
            "S",
            v.iter().map(|&(l, r, s)| Match::new(l, r, s)).collect(),
        )
    }

    #[test]
    fn empty_relation() {
        let r = make_raw_relation("R", Vec::<String>::new());
        assert_eq!(r.len(), 0);
        assert!(r.is_empty());
        assert_eq!(r.get(0), None);
    }

    #[test]
    fn offsets_preserve_order() {
        let r = make_raw_relation("R", ["dog", "cat"]);
        assert_eq!(r.get(0), Some("dog"));
        assert_eq!(r.get(1), Some("cat"));
        assert_eq!(r.name(), "R");
    }

    #[test]
    fn duplicate_tokens_get_distinct_offsets() {
        let r = make_raw_relation("R", ["a", "a"]);
        assert_eq!(r.len(), 2);
        assert_eq!(r.get(0), r.get(1));
    }

    #[test]
    fn canonicalize_sorts() {
        let out = canonicalize(ms(&[(1, 0, 0.9), (0, 0, 0.8)]));
        assert_eq!(out, ms(&[(0, 0, 0.8), (1, 0, 0.9)]));
    }

    #[test]
    fn canonicalize_empty() {
        assert_eq!(canonicalize(ms(&[])), ms(&[]));
    }

    #[test]
    fn canonicalize_dedups_keeping_first() {
        assert_eq!(
            canonicalize(ms(&[(0, 0, 0.8), (0, 0, 0.8)])),
            ms(&[(0, 0, 0.8)])
        );
        assert_eq!(
            canonicalize(ms(&[(0, 0, 0.7), (0, 0, 0.9)])),
            ms(&[(0, 0, 0.7)])
        );
    }

    #[test]
    fn threshold_bounds() {
        assert!(Threshold::new(-1.0).is_ok());
        assert!(Threshold::new(1.0).is_ok());
        assert_eq!(Threshold::new(1.5), Err(Error::ThresholdOutOfRange(1.5)));
        assert!(Threshold::new(f32::NAN).is_err());
        let t = Threshold::new(0.5).unwrap();
        assert!(t.accepts(0.5));
        assert!(!t.accepts(0.4999));
    }

    #[test]
    fn embedded_relation_shape() {
        let er = EmbeddedRelation::from_rows("R", 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(er.len(), 2);
        assert_eq!(er.row(1), &[3.0, 4.0]);
        assert!(EmbeddedRelation::from_rows("R", 3, vec![1.0; 4]).is_err());
        assert!(EmbeddedRelation::from_rows("R", 0, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn canonicalize_idempotent(v in prop::collection::vec((0u64..8, 0u64..8, -1.0f32..1.0), 0..64)) {
            let once = canonicalize(ms(&v));
            prop_assert!(once.is_canonical());
            let twice = canonicalize(once.clone());
            prop_assert!(once.bitwise_eq(&twice));
        }

        #[test]
        fn tokens_round_trip(tokens in prop::collection::vec(".*", 0..32)) {
            let r = make_raw_relation("R", tokens.clone());
            for (i, t) in tokens.iter().enumerate() {
                prop_assert_eq!(r.get(i as u64).unwrap().as_bytes(), t.as_bytes());
            }
        }
    }
}
