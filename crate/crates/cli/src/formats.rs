//! On-disk formats: token files, match CSVs, run records.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use vecjoin::{JoinStats, MatchSet, RawRelation};

use crate::error::{CliError, CliResult};

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// One UTF-8 token per LF-terminated line. A trailing CR is dropped.
pub fn read_token_file(path: &Path) -> CliResult<RawRelation> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(RawRelation::new(
        name,
        lines.into_iter().map(|l| l.strip_suffix('\r').unwrap_or(l)),
    ))
}

pub fn write_token_file<'a>(
    path: &Path,
    tokens: impl IntoIterator<Item = &'a str>,
) -> CliResult<()> {
    let f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    for t in tokens {
        w.write_all(t.as_bytes()).map_err(|e| io_err(path, e))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Headerless `left,right,similarity` rows; similarity is the shortest
/// decimal that round-trips to the same fp32.
pub fn write_matches<W: Write>(mut w: W, m: &MatchSet) -> std::io::Result<()> {
    for x in m.iter() {
        writeln!(w, "{},{},{}", x.left, x.right, x.similarity)?;
    }
    w.flush()
}

pub fn write_matches_file(path: &Path, m: &MatchSet) -> CliResult<()> {
    let f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_matches(BufWriter::new(f), m).map_err(|e| io_err(path, e))
}

/// Byte counts: plain integers, or `K`/`M`/`G` suffixes (binary, optional
/// `B`/`iB`), e.g. `65536`, `64MB`, `1GiB`.
pub fn parse_bytes(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let digits_end = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (num, unit) = t.split_at(digits_end);
    let n: u64 = num
        .parse()
        .map_err(|_| format!("invalid byte count {s:?}"))?;
    let shift = match unit.to_ascii_uppercase().as_str() {
        "" | "B" => 0,
        "K" | "KB" | "KIB" => 10,
        "M" | "MB" | "MIB" => 20,
        "G" | "GB" | "GIB" => 30,
        _ => return Err(format!("invalid byte unit in {s:?}")),
    };
    n.checked_mul(1u64 << shift)
        .ok_or_else(|| format!("byte count {s:?} overflows"))
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Flat record of one join run: configuration echo followed by statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algo: String,
    pub left_rows: u64,
    pub right_rows: u64,
    pub dim: usize,
    pub threshold: f32,
    pub threads: usize,
    pub budget_bytes: u64,
    pub model: String,
    pub seed: u64,
    pub inner_relation: String,
    pub wall_nanos: u64,
    pub model_calls_left: u64,
    pub model_calls_right: u64,
    pub pairs_compared: u64,
    pub matches: u64,
    pub peak_buffer_bytes: u64,
    pub tiles_executed: u64,
    pub repaired_rows: u64,
    pub timestamp_ms: u64,
}

impl RunRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        stats: &JoinStats,
        left_rows: u64,
        right_rows: u64,
        dim: usize,
        threshold: f32,
        budget_bytes: u64,
        model: String,
        seed: u64,
    ) -> Self {
        RunRecord {
            algo: stats.algo.to_string(),
            left_rows,
            right_rows,
            dim,
            threshold,
            threads: stats.threads,
            budget_bytes,
            model,
            seed,
            inner_relation: match stats.inner_relation {
                vecjoin::InnerRelation::Left => "left".into(),
                vecjoin::InnerRelation::Right => "right".into(),
            },
            wall_nanos: stats.wall_nanos,
            model_calls_left: stats.model_calls_left,
            model_calls_right: stats.model_calls_right,
            pairs_compared: stats.pairs_compared,
            matches: stats.matches,
            peak_buffer_bytes: stats.peak_buffer_bytes,
            tiles_executed: stats.tiles_executed,
            repaired_rows: stats.repaired_rows,
            timestamp_ms: now_ms(),
        }
    }
}
