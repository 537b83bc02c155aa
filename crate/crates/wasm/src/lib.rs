//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and strings and returns a JSON string;
//! failures come back as `{"error": "..."}`.

pub mod demo;

use serde::Serialize;
use vecjoin::cost::CostParams;
use wasm_bindgen::prelude::wasm_bindgen;

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())) {
        Ok(s) => s,
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

/// Similarity matrix, matches and tiles for two newline-separated token lists.
#[wasm_bindgen]
pub fn similarity_heatmap(
    left: &str,
    right: &str,
    seed: u32,
    dim: u32,
    theta: f32,
    budget_bytes: f64,
) -> String {
    to_json(demo::heatmap(
        left,
        right,
        seed.into(),
        dim as usize,
        theta,
        budget_bytes as u64,
    ))
}

/// Block sizes and tile layout for a join of the given shape.
#[wasm_bindgen]
pub fn tile_plan(left_rows: f64, right_rows: f64, dim: u32, budget_bytes: f64) -> String {
    to_json(demo::tile_plan(
        left_rows as u64,
        right_rows as u64,
        dim as usize,
        budget_bytes as u64,
    ))
}

/// Cost estimates of each formulation for square joins up to `max_rows`.
#[wasm_bindgen]
pub fn cost_curves(
    max_rows: f64,
    points: u32,
    dim: u32,
    budget_bytes: f64,
    model_ns: f64,
    tensor_efficiency: f64,
) -> String {
    let params = CostParams {
        model_ns,
        tensor_efficiency,
        ..CostParams::default()
    };
    to_json(demo::cost_curves(
        max_rows as u64,
        points as usize,
        dim as usize,
        budget_bytes as u64,
        &params,
    ))
}
