//! Demo computations, independent of the JS boundary so they run natively.
//!
//! `std::time::Instant` is unavailable on `wasm32-unknown-unknown`, so the
//! heatmap drives the tiling primitives directly instead of the timed join
//! entry points; the arithmetic is the same.

use serde::Serialize;
use vecjoin::cost::{choose_plan, CostParams};
use vecjoin::linalg::{normalize_rows, threshold_scan, tile_similarity_with, TileScratch};
use vecjoin::{
    canonicalize, embed_relation, make_raw_relation, plan_batches, EmbeddingModel, Match, MatchSet,
    Threshold, Tile,
};

/// Largest relation the heatmap accepts per side.
pub const MAX_HEATMAP_ROWS: usize = 64;
/// Most tiles listed in a plan view.
pub const MAX_LISTED_TILES: u64 = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct TileRect {
    pub left_start: u64,
    pub left_count: u64,
    pub right_start: u64,
    pub right_count: u64,
}

impl From<Tile> for TileRect {
    fn from(t: Tile) -> Self {
        TileRect {
            left_start: t.left_row_start,
            left_count: t.left_row_count,
            right_start: t.right_row_start,
            right_count: t.right_row_count,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Heatmap {
    pub left: Vec<String>,
    pub right: Vec<String>,
    /// Row-major `left.len() × right.len()` similarities.
    pub similarities: Vec<f32>,
    /// `(left, right, similarity)` in canonical order.
    pub matches: Vec<(u64, u64, f32)>,
    pub tiles: Vec<TileRect>,
    pub model_calls: u64,
}

fn tokens(text: &str) -> Vec<&str> {
    text.lines()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Embeds two newline-separated token lists with the synthetic model and
/// joins them tile by tile under `budget_bytes`.
pub fn heatmap(
    left_text: &str,
    right_text: &str,
    seed: u64,
    dim: usize,
    theta: f32,
    budget_bytes: u64,
) -> Result<Heatmap, String> {
    let (lt, rt) = (tokens(left_text), tokens(right_text));
    if lt.len() > MAX_HEATMAP_ROWS || rt.len() > MAX_HEATMAP_ROWS {
        return Err(format!("at most {MAX_HEATMAP_ROWS} tokens per side"));
    }
    let theta = Threshold::new(theta).map_err(|e| e.to_string())?;
    let model = EmbeddingModel::synthetic(seed, dim).map_err(|e| e.to_string())?;
    let (lr, rr) = (
        make_raw_relation("left", lt.iter().copied()),
        make_raw_relation("right", rt.iter().copied()),
    );
    let plan = plan_batches(lr.len() as u64, rr.len() as u64, dim, budget_bytes)
        .map_err(|e| e.to_string())?;
    let le = normalize_rows(embed_relation(&model, &lr).map_err(|e| e.to_string())?).relation;
    let re = normalize_rows(embed_relation(&model, &rr).map_err(|e| e.to_string())?).relation;

    let width = rr.len();
    let mut similarities = vec![0.0f32; lr.len() * width];
    let mut buf = vec![0.0f32; plan.buffer_elems as usize];
    let mut scratch = TileScratch::new();
    let mut sink = Vec::new();
    let mut tiles = Vec::new();
    for tile in plan.tiles() {
        tile_similarity_with(&le, &re, &tile, &mut buf, &mut scratch).map_err(|e| e.to_string())?;
        threshold_scan(&buf, &tile, theta, &mut sink);
        let rc = tile.right_row_count as usize;
        for i in 0..tile.left_row_count as usize {
            let row = tile.left_row_start as usize + i;
            let dst = row * width + tile.right_row_start as usize;
            similarities[dst..dst + rc].copy_from_slice(&buf[i * rc..(i + 1) * rc]);
        }
        tiles.push(tile.into());
    }
    let matches = canonicalize(MatchSet::from_matches("left", "right", sink))
        .iter()
        .map(|m: &Match| (m.left, m.right, m.similarity))
        .collect();
    Ok(Heatmap {
        left: lt.into_iter().map(String::from).collect(),
        right: rt.into_iter().map(String::from).collect(),
        similarities,
        matches,
        tiles,
        model_calls: model.call_count(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanView {
    pub left_block_rows: u64,
    pub right_block_rows: u64,
    pub left_blocks: u64,
    pub right_blocks: u64,
    pub tile_count: u64,
    pub buffer_bytes: u64,
    /// The first [`MAX_LISTED_TILES`] tiles in execution order.
    pub tiles: Vec<TileRect>,
}

pub fn tile_plan(
    left_rows: u64,
    right_rows: u64,
    dim: usize,
    budget_bytes: u64,
) -> Result<PlanView, String> {
    let plan = plan_batches(left_rows, right_rows, dim, budget_bytes).map_err(|e| e.to_string())?;
    Ok(PlanView {
        left_block_rows: plan.left_block_rows,
        right_block_rows: plan.right_block_rows,
        left_blocks: plan.left_blocks(),
        right_blocks: plan.right_blocks(),
        tile_count: plan.tile_count(),
        buffer_bytes: plan.buffer_bytes(),
        tiles: plan
            .tiles()
            .take(MAX_LISTED_TILES as usize)
            .map(TileRect::from)
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CostCurves {
    /// Rows per side; both relations have this size.
    pub rows: Vec<u64>,
    pub naive_nlj: Vec<f64>,
    pub prefetch_nlj: Vec<f64>,
    pub tensor: Vec<f64>,
    pub chosen: Vec<String>,
}

/// Estimates for square joins at `points` sizes spaced geometrically in
/// `[2, max_rows]`.
pub fn cost_curves(
    max_rows: u64,
    points: usize,
    dim: usize,
    budget_bytes: u64,
    params: &CostParams,
) -> Result<CostCurves, String> {
    params.validate().map_err(|e| e.to_string())?;
    if max_rows < 2 || points < 2 {
        return Err("need max_rows >= 2 and points >= 2".into());
    }
    let mut rows: Vec<u64> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (2.0 * (max_rows as f64 / 2.0).powf(t)).round() as u64
        })
        .collect();
    rows.dedup();
    let mut c = CostCurves {
        rows: rows.clone(),
        naive_nlj: Vec::new(),
        prefetch_nlj: Vec::new(),
        tensor: Vec::new(),
        chosen: Vec::new(),
    };
    for n in rows {
        let p = choose_plan(n, n, dim, budget_bytes, params);
        c.naive_nlj.push(p.naive_nlj);
        c.prefetch_nlj.push(p.prefetch_nlj);
        c.tensor.push(p.tensor);
        c.chosen.push(p.chosen.to_string());
    }
    Ok(c)
}
