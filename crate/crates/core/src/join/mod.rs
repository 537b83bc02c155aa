//! Embedding-aware selection and join operators.
//!
//! Three physical formulations of the cosine-threshold join are provided:
//!
//! - [`nlj_naive`] embeds inside the pair loop (quadratic model calls),
//! - [`nlj_prefetch`] embeds each relation once, then runs a parallel
//!   nested loop over the cached vectors,
//! - [`tensor_join`] normalizes both embedding matrices and evaluates them
//!   tile by tile with the blocked kernel under a per-worker buffer budget.
//!
//! All three score a pair as the sequential fp32 dot product of the two
//! unit-normalized embeddings, so for a given model and threshold they return
//! bit-identical [`MatchSet`]s regardless of budget or thread count.

mod nlj;
mod plan;
mod tensor;

use serde::{Deserialize, Serialize};

pub use nlj::{nlj_naive, nlj_prefetch};
pub use plan::{plan_batches, BatchPlan};
pub use tensor::tensor_join;

use crate::embedding::EmbeddingModel;
use crate::error::Result;
use crate::linalg::{dot_seq, normalize_in_place};
use crate::relation::{Match, MatchSet, RawRelation, Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Selection,
    NaiveNlj,
    PrefetchNlj,
    Tensor,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Selection => "selection",
            Algo::NaiveNlj => "naive_nlj",
            Algo::PrefetchNlj => "prefetch_nlj",
            Algo::Tensor => "tensor",
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relation placed in the inner loop of a nested-loop join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerRelation {
    Left,
    Right,
}

/// Loop-order request. `Auto` puts the smaller relation inside (right on ties).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerChoice {
    #[default]
    Auto,
    Left,
    Right,
}

impl InnerChoice {
    pub fn resolve(self, left_len: usize, right_len: usize) -> InnerRelation {
        match self {
            InnerChoice::Left => InnerRelation::Left,
            InnerChoice::Right => InnerRelation::Right,
            InnerChoice::Auto if left_len < right_len => InnerRelation::Left,
            InnerChoice::Auto => InnerRelation::Right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinStats {
    pub algo: Algo,
    pub wall_nanos: u64,
    pub model_calls_left: u64,
    pub model_calls_right: u64,
    pub pairs_compared: u64,
    pub matches: u64,
    pub peak_buffer_bytes: u64,
    pub threads: usize,
    pub inner_relation: InnerRelation,
    pub tiles_executed: u64,
    /// Zero-norm embeddings that were repaired before comparison.
    pub repaired_rows: u64,
}

impl JoinStats {
    pub(crate) fn new(algo: Algo, threads: usize, inner_relation: InnerRelation) -> Self {
        JoinStats {
            algo,
            wall_nanos: 0,
            model_calls_left: 0,
            model_calls_right: 0,
            pairs_compared: 0,
            matches: 0,
            peak_buffer_bytes: 0,
            threads,
            inner_relation,
            tiles_executed: 0,
            repaired_rows: 0,
        }
    }

    pub fn model_calls(&self) -> u64 {
        self.model_calls_left + self.model_calls_right
    }
}

pub(crate) fn check_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(crate::Error::InvalidArgument(
            "threads must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Selects the tuples of `raw` whose similarity to `probe` passes `theta`.
/// Matches are `(offset, 0, similarity)`; the model is called `|R| + 1` times.
pub fn e_selection(
    raw: &RawRelation,
    model: &EmbeddingModel,
    probe: &str,
    theta: Threshold,
) -> Result<(MatchSet, JoinStats)> {
    let start = std::time::Instant::now();
    let dim = model.dim();
    let mut stats = JoinStats::new(Algo::Selection, 1, InnerRelation::Right);

    let mut q = model.embed(probe)?;
    stats.model_calls_right = 1;
    stats.repaired_rows += u64::from(normalize_in_place(&mut q));

    let mut out = MatchSet::new(raw.name(), "probe");
    let mut v = vec![0.0f32; dim];
    for (i, token) in raw.tokens().iter().enumerate() {
        model.embed_into(token, &mut v)?;
        stats.model_calls_left += 1;
        stats.repaired_rows += u64::from(normalize_in_place(&mut v));
        let sim = dot_seq(&v, &q);
        if theta.accepts(sim) {
            out.matches.push(Match::new(i as u64, 0, sim));
        }
    }
    stats.pairs_compared = raw.len() as u64;
    stats.matches = out.len() as u64;
    stats.wall_nanos = start.elapsed().as_nanos() as u64;
    Ok((out, stats))
}
