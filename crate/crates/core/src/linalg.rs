//! Cosine-similarity kernels.
//!
//! Every similarity a join reports is the sequential fp32 dot product of two
//! unit-normalized rows: `s = 0; for k in 0..dim { s += a[k] * b[k] }`. The
//! blocked tile kernel keeps that per-cell accumulation order and gets its
//! speed from computing many cells at once, so all join formulations agree bit
//! for bit instead of only within a tolerance.

use crate::error::{Error, Result};
use crate::relation::{EmbeddedRelation, Match, Offset, Threshold};

/// Norms below this are treated as zero and repaired during normalization.
pub const ZERO_NORM: f32 = 1e-12;

/// Rows of the left operand handled per micro-kernel step.
const MR: usize = 4;
/// Right rows per packed panel; one panel row is a single k-slice of 8 lanes.
const NR: usize = 8;

fn check_dims(a: &[f32], b: &[f32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot_seq(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Scalar reference dot product, accumulated sequentially in fp32.
pub fn dot(a: &[f32], b: &[f32]) -> Result<f32> {
    check_dims(a, b)?;
    Ok(dot_seq(a, b))
}

pub fn l2_norm(a: &[f32]) -> f32 {
    dot_seq(a, a).sqrt()
}

/// Divides `v` by its L2 norm. A vector whose norm is below [`ZERO_NORM`] gets
/// component 0 set to 1.0 before normalizing; returns true in that case.
pub fn normalize_in_place(v: &mut [f32]) -> bool {
    if v.is_empty() {
        return false;
    }
    let mut norm = l2_norm(v);
    let repaired = norm < ZERO_NORM;
    if repaired {
        v[0] = 1.0;
        norm = l2_norm(v);
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    repaired
}

pub fn cosine_vv(a: &[f32], b: &[f32]) -> Result<f32> {
    check_dims(a, b)?;
    let denom = l2_norm(a) * l2_norm(b);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(dot_seq(a, b) / denom)
}

/// Cosine of `a` against every row of `m`.
pub fn cosine_vm(a: &[f32], m: &EmbeddedRelation) -> Result<Vec<f32>> {
    if a.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: m.dim(),
        });
    }
    let na = l2_norm(a);
    if na == 0.0 {
        return Err(Error::ZeroVector);
    }
    m.rows()
        .map(|row| {
            let denom = na * l2_norm(row);
            if denom == 0.0 || !denom.is_finite() {
                Err(Error::ZeroVector)
            } else {
                Ok(dot_seq(a, row) / denom)
            }
        })
        .collect()
}

/// Result of [`normalize_rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub relation: EmbeddedRelation,
    /// Rows that were (numerically) zero and got repaired.
    pub repaired_rows: usize,
}

pub fn normalize_rows(mut er: EmbeddedRelation) -> Normalized {
    let dim = er.dim();
    let repaired_rows = er
        .data_mut()
        .chunks_exact_mut(dim)
        .map(normalize_in_place)
        .filter(|&r| r)
        .count();
    er.set_normalized(true);
    Normalized {
        relation: er,
        repaired_rows,
    }
}

/// Rectangular block of `left rows × right rows`. Dimensions are never split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tile {
    pub left_row_start: Offset,
    pub left_row_count: u64,
    pub right_row_start: Offset,
    pub right_row_count: u64,
}

impl Tile {
    pub fn new(
        left_row_start: u64,
        left_row_count: u64,
        right_row_start: u64,
        right_row_count: u64,
    ) -> Self {
        Tile {
            left_row_start,
            left_row_count,
            right_row_start,
            right_row_count,
        }
    }

    pub fn area(&self) -> u64 {
        self.left_row_count * self.right_row_count
    }
}

impl std::fmt::Display for Tile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}+{}, {}+{}]",
            self.left_row_start, self.left_row_count, self.right_row_start, self.right_row_count
        )
    }
}

/// Reusable packing space for the right operand of a tile.
#[derive(Debug, Default, Clone)]
pub struct TileScratch {
    packed: Vec<f32>,
}

impl TileScratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bytes currently held by the packing buffer.
    pub fn bytes(&self) -> usize {
        self.packed.capacity() * std::mem::size_of::<f32>()
    }
}

fn tile_ranges(
    left: &EmbeddedRelation,
    right: &EmbeddedRelation,
    tile: &Tile,
) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    if left.dim() != right.dim() {
        return Err(Error::DimensionMismatch {
            left: left.dim(),
            right: right.dim(),
        });
    }
    let out_of_range = || Error::TileOutOfRange(tile.to_string());
    if tile.left_row_count == 0 || tile.right_row_count == 0 {
        return Err(out_of_range());
    }
    let l0 = usize::try_from(tile.left_row_start).map_err(|_| out_of_range())?;
    let r0 = usize::try_from(tile.right_row_start).map_err(|_| out_of_range())?;
    let lc = usize::try_from(tile.left_row_count).map_err(|_| out_of_range())?;
    let rc = usize::try_from(tile.right_row_count).map_err(|_| out_of_range())?;
    let l1 = l0.checked_add(lc).ok_or_else(out_of_range)?;
    let r1 = r0.checked_add(rc).ok_or_else(out_of_range)?;
    if l1 > left.len() || r1 > right.len() {
        return Err(out_of_range());
    }
    Ok((l0..l1, r0..r1))
}

/// Fills `out` (row-major, `left_row_count × right_row_count`) with the dot
/// products of the tile's left rows against its right rows.
pub fn tile_similarity(
    left: &EmbeddedRelation,
    right: &EmbeddedRelation,
    tile: &Tile,
    out: &mut [f32],
) -> Result<()> {
    tile_similarity_with(left, right, tile, out, &mut TileScratch::new())
}

/// [`tile_similarity`] with caller-owned packing scratch, for reuse across tiles.
pub fn tile_similarity_with(
    left: &EmbeddedRelation,
    right: &EmbeddedRelation,
    tile: &Tile,
    out: &mut [f32],
    scratch: &mut TileScratch,
) -> Result<()> {
    for r in [left, right] {
        if !r.is_normalized() {
            return Err(Error::NotNormalized(r.source_name().to_string()));
        }
    }
    let (lrange, rrange) = tile_ranges(left, right, tile)?;
    let needed = lrange.len() * rrange.len();
    if out.len() < needed {
        return Err(Error::BufferTooSmall {
            needed,
            available: out.len(),
        });
    }
    let dim = left.dim();
    let lrows = &left.data()[lrange.start * dim..lrange.end * dim];
    let rrows = &right.data()[rrange.start * dim..rrange.end * dim];
    block_dot(lrows, rrows, dim, &mut out[..needed], scratch);
    Ok(())
}

/// `out[i * n + j] = dot_seq(left row i, right row j)` for the row-major
/// blocks `left` (m × dim) and `right` (n × dim).
fn block_dot(left: &[f32], right: &[f32], dim: usize, out: &mut [f32], scratch: &mut TileScratch) {
    let m = left.len() / dim;
    let n = right.len() / dim;
    let panels = n.div_ceil(NR);
    pack_panels(right, dim, n, panels, &mut scratch.packed);

    for p in 0..panels {
        let panel = &scratch.packed[p * dim * NR..(p + 1) * dim * NR];
        let col0 = p * NR;
        let cols = NR.min(n - col0);
        let mut i = 0;
        while i + MR <= m {
            let acc = micro::<MR>(&left[i * dim..(i + MR) * dim], panel, dim);
            store(&acc, out, i, n, col0, cols);
            i += MR;
        }
        match m - i {
            0 => {}
            1 => store(
                &micro::<1>(&left[i * dim..], panel, dim),
                out,
                i,
                n,
                col0,
                cols,
            ),
            2 => store(
                &micro::<2>(&left[i * dim..], panel, dim),
                out,
                i,
                n,
                col0,
                cols,
            ),
            3 => store(
                &micro::<3>(&left[i * dim..], panel, dim),
                out,
                i,
                n,
                col0,
                cols,
            ),
            _ => unreachable!(),
        }
    }
}

/// Transposes the right block into k-major panels of `NR` rows, zero padded.
fn pack_panels(right: &[f32], dim: usize, n: usize, panels: usize, packed: &mut Vec<f32>) {
    packed.clear();
    packed.resize(panels * dim * NR, 0.0);
    for (j, row) in right.chunks_exact(dim).enumerate().take(n) {
        let base = (j / NR) * dim * NR;
        let lane = j % NR;
        for (k, &x) in row.iter().enumerate() {
            packed[base + k * NR + lane] = x;
        }
    }
}

#[inline(always)]
fn micro<const M: usize>(left: &[f32], panel: &[f32], dim: usize) -> [[f32; NR]; M] {
    let mut acc = [[0.0f32; NR]; M];
    let rows: [&[f32]; M] = std::array::from_fn(|i| &left[i * dim..(i + 1) * dim]);
    for (k, b) in panel.chunks_exact(NR).enumerate() {
        let b: &[f32; NR] = b.try_into().unwrap();
        for i in 0..M {
            let a = rows[i][k];
            for j in 0..NR {
                acc[i][j] += a * b[j];
            }
        }
    }
    acc
}

#[inline(always)]
fn store<const M: usize>(
    acc: &[[f32; NR]; M],
    out: &mut [f32],
    row0: usize,
    n: usize,
    col0: usize,
    cols: usize,
) {
    for (i, lanes) in acc.iter().enumerate() {
        let dst = &mut out[(row0 + i) * n + col0..(row0 + i) * n + col0 + cols];
        dst.copy_from_slice(&lanes[..cols]);
    }
}

/// Appends every cell of a filled tile buffer that satisfies `theta`, with
/// tile-local coordinates shifted to global offsets.
pub fn threshold_scan(out: &[f32], tile: &Tile, theta: Threshold, sink: &mut Vec<Match>) {
    let cols = tile.right_row_count as usize;
    let cells = tile.area() as usize;
    for (idx, &sim) in out[..cells].iter().enumerate() {
        if theta.accepts(sim) {
            let i = (idx / cols) as u64;
            let j = (idx % cols) as u64;
            sink.push(Match::new(
                tile.left_row_start + i,
                tile.right_row_start + j,
                sim,
            ));
        }
    }
}

/// One left row against a strip of right rows, four independent sequential
/// accumulators at a time. `f(j, sim)` is called for every right row `j`.
#[inline]
pub(crate) fn strip_dot(a: &[f32], right: &[f32], dim: usize, mut f: impl FnMut(usize, f32)) {
    let n = right.len() / dim;
    let mut j = 0;
    while j + 4 <= n {
        let r0 = &right[j * dim..(j + 1) * dim];
        let r1 = &right[(j + 1) * dim..(j + 2) * dim];
        let r2 = &right[(j + 2) * dim..(j + 3) * dim];
        let r3 = &right[(j + 3) * dim..(j + 4) * dim];
        let (mut s0, mut s1, mut s2, mut s3) = (0.0f32, 0.0f32, 0.0f32, 0.0f32);
        for k in 0..dim {
            let x = a[k];
            s0 += x * r0[k];
            s1 += x * r1[k];
            s2 += x * r2[k];
            s3 += x * r3[k];
        }
        f(j, s0);
        f(j + 1, s1);
        f(j + 2, s2);
        f(j + 3, s3);
        j += 4;
    }
    while j < n {
        f(j, dot_seq(a, &right[j * dim..(j + 1) * dim]));
        j += 1;
    }
}
