use std::time::Instant;

use super::{check_threads, Algo, InnerChoice, InnerRelation, JoinStats};
use crate::embedding::{embed_relation, EmbeddingModel};
use crate::error::Result;
use crate::linalg::{dot_seq, normalize_in_place, normalize_rows, strip_dot};
use crate::relation::{canonicalize, EmbeddedRelation, Match, MatchSet, RawRelation, Threshold};

#[inline]
fn oriented(inner: InnerRelation, outer_idx: usize, inner_idx: usize, sim: f32) -> Match {
    match inner {
        InnerRelation::Right => Match::new(outer_idx as u64, inner_idx as u64, sim),
        InnerRelation::Left => Match::new(inner_idx as u64, outer_idx as u64, sim),
    }
}

/// Nested-loop join that calls the model inside the loops: once per outer
/// tuple and once per compared pair, `|outer| + |outer|·|inner|` calls total.
pub fn nlj_naive(
    left: &RawRelation,
    right: &RawRelation,
    model: &EmbeddingModel,
    theta: Threshold,
    inner: InnerChoice,
) -> Result<(MatchSet, JoinStats)> {
    let start = Instant::now();
    let inner_rel = inner.resolve(left.len(), right.len());
    let (outer_r, inner_r) = match inner_rel {
        InnerRelation::Right => (left, right),
        InnerRelation::Left => (right, left),
    };
    let dim = model.dim();
    let mut stats = JoinStats::new(Algo::NaiveNlj, 1, inner_rel);
    let (mut outer_calls, mut inner_calls, mut repaired) = (0u64, 0u64, 0u64);
    let mut ov = vec![0.0f32; dim];
    let mut iv = vec![0.0f32; dim];
    let mut matches = Vec::new();

    for (o, ot) in outer_r.tokens().iter().enumerate() {
        model.embed_into(ot, &mut ov)?;
        outer_calls += 1;
        repaired += u64::from(normalize_in_place(&mut ov));
        for (i, it) in inner_r.tokens().iter().enumerate() {
            model.embed_into(it, &mut iv)?;
            inner_calls += 1;
            repaired += u64::from(normalize_in_place(&mut iv));
            let sim = dot_seq(&ov, &iv);
            if theta.accepts(sim) {
                matches.push(oriented(inner_rel, o, i, sim));
            }
        }
    }

    (stats.model_calls_left, stats.model_calls_right) = match inner_rel {
        InnerRelation::Right => (outer_calls, inner_calls),
        InnerRelation::Left => (inner_calls, outer_calls),
    };
    stats.repaired_rows = repaired;
    let out = canonicalize(MatchSet::from_matches(left.name(), right.name(), matches));
    finish(&mut stats, left, right, &out, start);
    Ok((out, stats))
}

/// Nested-loop join over prefetched embeddings: each relation is embedded
/// once (`|R| + |S|` model calls), and outer rows are split into contiguous
/// ranges across `threads` workers.
pub fn nlj_prefetch(
    left: &RawRelation,
    right: &RawRelation,
    model: &EmbeddingModel,
    theta: Threshold,
    threads: usize,
    inner: InnerChoice,
) -> Result<(MatchSet, JoinStats)> {
    check_threads(threads)?;
    let start = Instant::now();
    let inner_rel = inner.resolve(left.len(), right.len());
    let mut stats = JoinStats::new(Algo::PrefetchNlj, threads, inner_rel);

    let le = normalize_rows(embed_relation(model, left)?);
    stats.model_calls_left = left.len() as u64;
    let re = normalize_rows(embed_relation(model, right)?);
    stats.model_calls_right = right.len() as u64;
    stats.repaired_rows = (le.repaired_rows + re.repaired_rows) as u64;

    let (outer_e, inner_e) = match inner_rel {
        InnerRelation::Right => (&le.relation, &re.relation),
        InnerRelation::Left => (&re.relation, &le.relation),
    };
    let matches = prefetch_loop(outer_e, inner_e, theta, threads, inner_rel);
    let out = canonicalize(MatchSet::from_matches(left.name(), right.name(), matches));
    finish(&mut stats, left, right, &out, start);
    Ok((out, stats))
}

fn prefetch_loop(
    outer: &EmbeddedRelation,
    inner: &EmbeddedRelation,
    theta: Threshold,
    threads: usize,
    inner_rel: InnerRelation,
) -> Vec<Match> {
    let dim = outer.dim();
    let scan = |rows: std::ops::Range<usize>| {
        let mut sink = Vec::new();
        for o in rows {
            strip_dot(outer.row(o), inner.data(), dim, |i, sim| {
                if theta.accepts(sim) {
                    sink.push(oriented(inner_rel, o, i, sim));
                }
            });
        }
        sink
    };

    let n = outer.len();
    if threads == 1 || n <= 1 {
        return scan(0..n);
    }
    let chunk = n.div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..n)
            .step_by(chunk)
            .map(|lo| {
                let scan = &scan;
                s.spawn(move || scan(lo..(lo + chunk).min(n)))
            })
            .collect();
        // joined in range order; canonicalize still runs because a left-inner
        // loop emits matches ordered by right offset
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("prefetch worker panicked"))
            .collect()
    })
}

pub(super) fn finish(
    stats: &mut JoinStats,
    left: &RawRelation,
    right: &RawRelation,
    out: &MatchSet,
    start: Instant,
) {
    stats.pairs_compared = left.len() as u64 * right.len() as u64;
    stats.matches = out.len() as u64;
    stats.wall_nanos = start.elapsed().as_nanos() as u64;
}
