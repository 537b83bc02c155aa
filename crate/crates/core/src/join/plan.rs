//! Memory-budgeted tile planning.
//!
//! The dense similarity matrix of a `|R| × |S|` join needs `4·|R|·|S|` bytes.
//! A plan cuts both relations along tuple boundaries into blocks whose
//! product fits the per-worker buffer budget; tiles are enumerated lazily in
//! row-major order so tiny budgets over large inputs stay cheap to plan.

use crate::error::{Error, Result};
use crate::linalg::Tile;

const CELL_BYTES: u64 = std::mem::size_of::<f32>() as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchPlan {
    pub left_rows: u64,
    pub right_rows: u64,
    pub left_block_rows: u64,
    pub right_block_rows: u64,
    /// Largest tile area, i.e. the fp32 cells one worker buffer must hold.
    pub buffer_elems: u64,
    pub budget_bytes: u64,
}

impl BatchPlan {
    /// Number of left blocks (tile rows of the grid).
    pub fn left_blocks(&self) -> u64 {
        if self.right_rows == 0 {
            0
        } else {
            self.left_rows.div_ceil(self.left_block_rows)
        }
    }

    pub fn right_blocks(&self) -> u64 {
        if self.left_rows == 0 {
            0
        } else {
            self.right_rows.div_ceil(self.right_block_rows)
        }
    }

    pub fn tile_count(&self) -> u64 {
        self.left_blocks() * self.right_blocks()
    }

    /// Tile `idx` in row-major grid order.
    pub fn tile(&self, idx: u64) -> Option<Tile> {
        if idx >= self.tile_count() {
            return None;
        }
        let rb = self.right_blocks();
        let (bi, bj) = (idx / rb, idx % rb);
        let l0 = bi * self.left_block_rows;
        let r0 = bj * self.right_block_rows;
        Some(Tile::new(
            l0,
            self.left_block_rows.min(self.left_rows - l0),
            r0,
            self.right_block_rows.min(self.right_rows - r0),
        ))
    }

    pub fn tiles(&self) -> impl Iterator<Item = Tile> + '_ {
        (0..self.tile_count()).map(|i| self.tile(i).expect("index below tile_count"))
    }

    pub fn buffer_bytes(&self) -> u64 {
        self.buffer_elems * CELL_BYTES
    }
}

/// Plans near-square blocks: `b = ⌊√(budget/4)⌋`, left blocks of
/// `min(b, |R|)` rows and right blocks filling the rest of the budget.
pub fn plan_batches(
    left_rows: u64,
    right_rows: u64,
    dim: usize,
    budget_bytes: u64,
) -> Result<BatchPlan> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be positive".into()));
    }
    let budget_elems = budget_bytes / CELL_BYTES;
    if budget_elems == 0 {
        return Err(Error::BudgetTooSmall(budget_bytes));
    }
    let b = budget_elems.isqrt();
    let left_block_rows = b.min(left_rows).max(1);
    let right_block_rows = (budget_elems / left_block_rows).min(right_rows).max(1);
    let buffer_elems = if left_rows == 0 || right_rows == 0 {
        0
    } else {
        left_block_rows * right_block_rows
    };
    Ok(BatchPlan {
        left_rows,
        right_rows,
        left_block_rows,
        right_block_rows,
        buffer_elems,
        budget_bytes,
    })
}
