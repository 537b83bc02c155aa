//! Analytic cost model for embedding-aware selection and join, plus
//! calibration of its constants and plan choice.
//!
//! Costs are in nanoseconds. `A` is the cost of touching one tuple row, `M`
//! one model call, and `C(dim) = c0 + c1·dim` one similarity evaluation.
//! The tensor formulation scales `C` by a calibrated efficiency `κ` and pays
//! for re-touching input rows once per tile they take part in.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::join::{plan_batches, Algo};
use crate::linalg::{cosine_vv, dot_seq, normalize_rows, tile_similarity_with, Tile, TileScratch};
use crate::relation::EmbeddedRelation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    pub access_ns: f64,
    pub model_ns: f64,
    pub compare_base_ns: f64,
    pub compare_per_dim_ns: f64,
    pub tensor_efficiency: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            access_ns: 1.0,
            model_ns: 1000.0,
            compare_base_ns: 2.0,
            compare_per_dim_ns: 0.5,
            tensor_efficiency: 0.2,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("access_ns", self.access_ns),
            ("model_ns", self.model_ns),
            ("compare_base_ns", self.compare_base_ns),
            ("compare_per_dim_ns", self.compare_per_dim_ns),
            ("tensor_efficiency", self.tensor_efficiency),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.tensor_efficiency == 0.0 || self.tensor_efficiency > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "tensor_efficiency must lie in (0, 1], got {}",
                self.tensor_efficiency
            )));
        }
        Ok(())
    }

    /// Per-comparison cost `C(dim)`.
    pub fn compare_ns(&self, dim: usize) -> f64 {
        self.compare_base_ns + self.compare_per_dim_ns * dim as f64
    }
}

pub fn estimate_selection(rows: u64, dim: usize, p: &CostParams) -> f64 {
    rows as f64 * (p.access_ns + p.model_ns + p.compare_ns(dim))
}

pub fn estimate_nlj_naive(left: u64, right: u64, dim: usize, p: &CostParams) -> f64 {
    left as f64 * right as f64 * (p.access_ns + p.model_ns + p.compare_ns(dim))
}

pub fn estimate_nlj_prefetch(left: u64, right: u64, dim: usize, p: &CostParams) -> f64 {
    let pairs = left as f64 * right as f64;
    pairs * (p.access_ns + p.compare_ns(dim)) + (left + right) as f64 * p.model_ns
}

/// Row touches spent loading tiles: every left row once per right block and
/// every right row once per left block.
pub fn tile_overhead_rows(left: u64, right: u64, dim: usize, budget_bytes: u64) -> Option<u64> {
    let plan = plan_batches(left, right, dim.max(1), budget_bytes).ok()?;
    Some(left * plan.right_blocks() + right * plan.left_blocks())
}

/// Tensor-formulation estimate; infinite when the budget cannot hold a cell.
pub fn estimate_tensor(
    left: u64,
    right: u64,
    dim: usize,
    budget_bytes: u64,
    p: &CostParams,
) -> f64 {
    let Some(touches) = tile_overhead_rows(left, right, dim, budget_bytes) else {
        return f64::INFINITY;
    };
    let pairs = left as f64 * right as f64;
    pairs * (p.access_ns + p.tensor_efficiency * p.compare_ns(dim))
        + (left + right) as f64 * p.model_ns
        + touches as f64 * p.access_ns
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanChoice {
    pub chosen: Algo,
    pub naive_nlj: f64,
    pub prefetch_nlj: f64,
    pub tensor: f64,
}

/// Cheapest formulation; exact ties prefer tensor, then prefetch.
pub fn choose_plan(
    left: u64,
    right: u64,
    dim: usize,
    budget_bytes: u64,
    p: &CostParams,
) -> PlanChoice {
    let naive_nlj = estimate_nlj_naive(left, right, dim, p);
    let prefetch_nlj = estimate_nlj_prefetch(left, right, dim, p);
    let tensor = estimate_tensor(left, right, dim, budget_bytes, p);
    let mut chosen = (Algo::Tensor, tensor);
    for cand in [
        (Algo::PrefetchNlj, prefetch_nlj),
        (Algo::NaiveNlj, naive_nlj),
    ] {
        if cand.1 < chosen.1 {
            chosen = cand;
        }
    }
    PlanChoice {
        chosen: chosen.0,
        naive_nlj,
        prefetch_nlj,
        tensor,
    }
}

const REPS: usize = 5;
const CAL_DIMS: (usize, usize) = (16, 512);
const KAPPA_BLOCK: usize = 1024;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn timed<F: FnMut() -> f32>(mut f: F) -> (f64, f32) {
    let t = Instant::now();
    let v = f();
    (t.elapsed().as_nanos() as f64, v)
}

fn random_unit_rows(name: &str, rows: usize, dim: usize, seed: u64) -> EmbeddedRelation {
    let mut data = vec![0.0f32; rows * dim];
    for (i, row) in data.chunks_exact_mut(dim).enumerate() {
        crate::embedding::synthetic_embedding(&i.to_string(), seed, row);
    }
    normalize_rows(EmbeddedRelation::from_rows(name, dim, data).expect("shape")).relation
}

/// Measures cost constants on this machine. Single-threaded; every value is
/// the median of five repetitions. `samples` (at least 100) sets the number
/// of rows, calls and pairs timed per repetition.
pub fn calibrate(model: &EmbeddingModel, dim: usize, samples: usize) -> CostParams {
    let samples = samples.max(100);
    let dim = dim.max(1);
    let mut sink = 0.0f32;

    // A: sequential scan over rows of `dim` floats
    let rows = random_unit_rows("scan", samples, dim, 1);
    let access_ns = median(
        (0..REPS)
            .map(|_| {
                let (t, v) = timed(|| rows.rows().map(|r| r.iter().sum::<f32>()).sum());
                sink += v;
                t / samples as f64
            })
            .collect(),
    );

    // M: distinct tokens so nothing downstream can be shared
    let mut buf = vec![0.0f32; model.dim()];
    let model_ns = median(
        (0..REPS)
            .map(|rep| {
                let t = Instant::now();
                for i in 0..samples {
                    let _ = model.embed_into(&format!("cal_{rep}_{i}"), &mut buf);
                }
                sink += buf[0];
                t.elapsed().as_nanos() as f64 / samples as f64
            })
            .collect(),
    );

    // C: scalar cosine at two dims, fitted as c0 + c1·dim
    let mut per_pair = |d: usize| {
        let a = random_unit_rows("a", samples, d, 2);
        let b = random_unit_rows("b", samples, d, 3);
        median(
            (0..REPS)
                .map(|_| {
                    let (t, v) = timed(|| {
                        a.rows()
                            .zip(b.rows())
                            .map(|(x, y)| cosine_vv(x, y).unwrap_or(0.0))
                            .sum()
                    });
                    sink += v;
                    t / samples as f64
                })
                .collect(),
        )
    };
    let (lo, hi) = (per_pair(CAL_DIMS.0), per_pair(CAL_DIMS.1));
    let compare_per_dim_ns = ((hi - lo) / (CAL_DIMS.1 - CAL_DIMS.0) as f64).max(f64::MIN_POSITIVE);
    let compare_base_ns = (lo - compare_per_dim_ns * CAL_DIMS.0 as f64).max(0.0);

    // κ: blocked kernel vs one-pair-at-a-time loop on the same block
    let tensor_efficiency = measure_tensor_efficiency(dim, KAPPA_BLOCK).clamp(1e-6, 1.0);
    std::hint::black_box(sink);

    CostParams {
        access_ns,
        model_ns,
        compare_base_ns,
        compare_per_dim_ns,
        tensor_efficiency,
    }
}

/// Time of the blocked tile kernel relative to a pair-at-a-time dot loop over
/// the same `block × block` square. Not clamped.
pub fn measure_tensor_efficiency(dim: usize, block: usize) -> f64 {
    let l = random_unit_rows("l", block, dim, 4);
    let r = random_unit_rows("r", block, dim, 5);
    let tile = Tile::new(0, block as u64, 0, block as u64);
    let mut out = vec![0.0f32; block * block];
    let mut scratch = TileScratch::new();
    let mut sink = 0.0f32;
    let tiled = median(
        (0..REPS)
            .map(|_| {
                timed(|| {
                    tile_similarity_with(&l, &r, &tile, &mut out, &mut scratch)
                        .expect("valid tile");
                    out[0]
                })
                .0
            })
            .collect(),
    );
    let scalar = median(
        (0..REPS)
            .map(|_| {
                let (t, v) = timed(|| {
                    l.rows()
                        .flat_map(|x| r.rows().map(move |y| dot_seq(x, y)))
                        .sum()
                });
                sink += v;
                t
            })
            .collect(),
    );
    std::hint::black_box(sink);
    tiled / scalar
}
