use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use super::nlj::finish;
use super::plan::{plan_batches, BatchPlan};
use super::{check_threads, Algo, InnerRelation, JoinStats};
use crate::embedding::{embed_relation, EmbeddingModel};
use crate::error::Result;
use crate::linalg::{normalize_rows, threshold_scan, tile_similarity_with, TileScratch};
use crate::relation::{canonicalize, EmbeddedRelation, Match, MatchSet, RawRelation, Threshold};

/// Blocked join: embed both relations once, normalize the rows, then evaluate
/// the similarity matrix tile by tile. Each worker owns one buffer of
/// `plan.buffer_elems` cells, so transient memory is at most
/// `threads × budget_bytes`.
pub fn tensor_join(
    left: &RawRelation,
    right: &RawRelation,
    model: &EmbeddingModel,
    theta: Threshold,
    budget_bytes: u64,
    threads: usize,
) -> Result<(MatchSet, JoinStats)> {
    check_threads(threads)?;
    let plan = plan_batches(
        left.len() as u64,
        right.len() as u64,
        model.dim(),
        budget_bytes,
    )?;
    let start = Instant::now();
    let mut stats = JoinStats::new(Algo::Tensor, threads, InnerRelation::Right);

    let le = normalize_rows(embed_relation(model, left)?);
    stats.model_calls_left = left.len() as u64;
    let re = normalize_rows(embed_relation(model, right)?);
    stats.model_calls_right = right.len() as u64;
    stats.repaired_rows = (le.repaired_rows + re.repaired_rows) as u64;

    let run = run_tiles(&le.relation, &re.relation, &plan, theta, threads)?;
    stats.tiles_executed = plan.tile_count();
    stats.peak_buffer_bytes = run.buffer_bytes;

    let out = canonicalize(MatchSet::from_matches(
        left.name(),
        right.name(),
        run.matches,
    ));
    finish(&mut stats, left, right, &out, start);
    Ok((out, stats))
}

pub(crate) struct TileRun {
    pub matches: Vec<Match>,
    /// Sum of the similarity buffers allocated by all workers.
    pub buffer_bytes: u64,
}

/// Executes every tile of `plan` over already-normalized relations.
pub(crate) fn run_tiles(
    left: &EmbeddedRelation,
    right: &EmbeddedRelation,
    plan: &BatchPlan,
    theta: Threshold,
    threads: usize,
) -> Result<TileRun> {
    let tiles = plan.tile_count();
    let workers = (threads as u64).min(tiles) as usize;
    if workers == 0 {
        return Ok(TileRun {
            matches: Vec::new(),
            buffer_bytes: 0,
        });
    }
    let next = AtomicU64::new(0);
    let work = || -> Result<(Vec<Match>, u64)> {
        let mut buf = vec![0.0f32; plan.buffer_elems as usize];
        let mut scratch = TileScratch::new();
        let mut sink = Vec::new();
        loop {
            let idx = next.fetch_add(1, Ordering::Relaxed);
            let Some(tile) = plan.tile(idx) else { break };
            tile_similarity_with(left, right, &tile, &mut buf, &mut scratch)?;
            threshold_scan(&buf, &tile, theta, &mut sink);
        }
        Ok((sink, (buf.capacity() * std::mem::size_of::<f32>()) as u64))
    };

    let parts: Vec<Result<(Vec<Match>, u64)>> = if workers == 1 {
        vec![work()]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|_| s.spawn(work)).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("tile worker panicked"))
                .collect()
        })
    };

    let mut matches = Vec::new();
    let mut buffer_bytes = 0;
    for part in parts {
        let (sink, bytes) = part?;
        matches.extend(sink);
        buffer_bytes += bytes;
    }
    Ok(TileRun {
        matches,
        buffer_bytes,
    })
}
