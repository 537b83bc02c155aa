//! Experiment harness: each experiment expands to a list of configurations,
//! every configuration is run `reps` times on seeded synthetic data, and one
//! CSV row per configuration records the median wall time with min and max.
//!
//! | id | question |
//! |----|----------|
//! | e1 | naive vs prefetch NLJ under an expensive model |
//! | e2 | prefetch NLJ thread scaling |
//! | e3 | smaller vs larger relation in the inner loop |
//! | e4 | tensor join under shrinking buffer budgets |
//! | e5 | prefetch NLJ vs tensor join, end to end and per fp32 element |

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};
use vecjoin::{Algo, EmbeddingModel, InnerChoice, RawRelation, Threshold};

use crate::commands::{gen_tokens, run_join};
use crate::error::{CliError, CliResult};
use crate::formats::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Experiment::E1 => "e1",
            Experiment::E2 => "e2",
            Experiment::E3 => "e3",
            Experiment::E4 => "e4",
            Experiment::E5 => "e5",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub reps: usize,
    pub threads: usize,
    pub seed: u64,
    pub theta: f32,
    pub dim: usize,
    /// Injected model latency for e1.
    pub latency_ns: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            reps: 3,
            threads: 8,
            seed: 42,
            theta: 0.4,
            dim: 100,
            latency_ns: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub label: String,
    pub algo: Algo,
    pub left_rows: u64,
    pub right_rows: u64,
    pub dim: usize,
    pub threads: usize,
    pub budget_bytes: u64,
    pub inner: InnerChoice,
    pub latency_ns: u64,
    pub theta: f32,
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub experiment: &'static str,
    pub label: String,
    /// Statistics of the first repetition with `wall_nanos` set to the median.
    pub record: RunRecord,
    pub repetitions: usize,
    pub wall_nanos_min: u64,
    pub wall_nanos_max: u64,
    /// Median wall time divided by `left_rows · right_rows · dim`.
    pub per_fp32_ns: f64,
}

impl BenchRow {
    fn columns(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("experiment".into(), self.experiment.into());
        m.insert("label".into(), self.label.clone().into());
        if let Ok(Value::Object(rec)) = serde_json::to_value(&self.record) {
            m.extend(rec);
        }
        m.insert("repetitions".into(), self.repetitions.into());
        m.insert("wall_nanos_min".into(), self.wall_nanos_min.into());
        m.insert("wall_nanos_max".into(), self.wall_nanos_max.into());
        m.insert("per_fp32_ns".into(), self.per_fp32_ns.into());
        m
    }
}

const MB: u64 = 1 << 20;

fn cfg(label: String, algo: Algo, l: u64, r: u64, o: &BenchOptions) -> BenchConfig {
    BenchConfig {
        label,
        algo,
        left_rows: l,
        right_rows: r,
        dim: o.dim,
        threads: o.threads,
        budget_bytes: 64 * MB,
        inner: InnerChoice::Auto,
        latency_ns: 0,
        theta: o.theta,
    }
}

/// Configurations an experiment runs at a given scale.
pub fn configs(exp: Experiment, scale: Scale, o: &BenchOptions) -> Vec<BenchConfig> {
    let desk = scale == Scale::Desk;
    match exp {
        Experiment::E1 => {
            let sizes: &[u64] = if desk {
                &[256, 512, 1024, 2048]
            } else {
                &[10_000, 100_000]
            };
            sizes
                .iter()
                .flat_map(|&n| {
                    [Algo::NaiveNlj, Algo::PrefetchNlj].map(|algo| BenchConfig {
                        threads: 1,
                        latency_ns: o.latency_ns,
                        ..cfg(format!("{algo} n={n}"), algo, n, n, o)
                    })
                })
                .collect()
        }
        Experiment::E2 => {
            let (n, threads): (u64, &[usize]) = if desk {
                (4096, &[1, 2, 4, 8])
            } else {
                (10_000, &[1, 2, 4, 8, 12, 16, 24, 28, 32, 48])
            };
            threads
                .iter()
                .map(|&t| BenchConfig {
                    threads: t,
                    ..cfg(format!("threads={t}"), Algo::PrefetchNlj, n, n, o)
                })
                .collect()
        }
        Experiment::E3 => {
            let shapes: &[(u64, u64)] = if desk {
                &[(4096, 512), (4096, 1024), (4096, 2048)]
            } else {
                &[(100_000, 1_000), (100_000, 10_000), (100_000, 100_000)]
            };
            shapes
                .iter()
                .flat_map(|&(l, r)| {
                    [
                        ("smaller", InnerChoice::Right),
                        ("larger", InnerChoice::Left),
                    ]
                    .map(|(tag, inner)| BenchConfig {
                        inner,
                        ..cfg(format!("{l}x{r} inner={tag}"), Algo::PrefetchNlj, l, r, o)
                    })
                })
                .collect()
        }
        Experiment::E4 => {
            let n: u64 = if desk { 4096 } else { 100_000 };
            let whole = n * n * 4;
            let budgets: Vec<(String, u64)> = if desk {
                vec![
                    ("whole".into(), whole),
                    ("64MB".into(), 64 * MB),
                    ("16MB".into(), 16 * MB),
                    ("4MB".into(), 4 * MB),
                    ("1MB".into(), MB),
                ]
            } else {
                [4096u64, 1024, 256, 64, 16, 4]
                    .iter()
                    .map(|&m| (format!("{m}MB"), m * MB))
                    .collect()
            };
            budgets
                .into_iter()
                .map(|(tag, b)| BenchConfig {
                    budget_bytes: b,
                    ..cfg(format!("budget={tag}"), Algo::Tensor, n, n, o)
                })
                .collect()
        }
        Experiment::E5 => {
            let sizes: &[u64] = if desk {
                &[1024, 2048, 4096]
            } else {
                &[10_000, 50_000, 100_000]
            };
            let mut out: Vec<BenchConfig> = sizes
                .iter()
                .flat_map(|&n| {
                    [Algo::PrefetchNlj, Algo::Tensor].map(|a| cfg(format!("{a} n={n}"), a, n, n, o))
                })
                .collect();
            // per-fp32 grid: fixed total element count split across dims
            let ops: &[u64] = if desk {
                &[25_600, 2_560_000, 256_000_000]
            } else {
                &[25_600, 2_560_000, 256_000_000, 25_600_000_000]
            };
            for &total in ops {
                for dim in [4usize, 16, 64, 256] {
                    let n = ((total / dim as u64) as f64).sqrt().round() as u64;
                    for a in [Algo::PrefetchNlj, Algo::Tensor] {
                        out.push(BenchConfig {
                            dim,
                            theta: 0.9,
                            ..cfg(format!("{a} fp32ops={total} dim={dim}"), a, n, n, o)
                        });
                    }
                }
            }
            out
        }
    }
}

fn relations(c: &BenchConfig, seed: u64) -> (RawRelation, RawRelation) {
    (
        RawRelation::new("R", gen_tokens(c.left_rows, seed)),
        RawRelation::new("S", gen_tokens(c.right_rows, seed.wrapping_add(1))),
    )
}

pub fn run_config(exp: Experiment, c: &BenchConfig, o: &BenchOptions) -> CliResult<BenchRow> {
    let reps = o.reps.max(1);
    let model = EmbeddingModel::synthetic(o.seed, c.dim)?.with_latency_ns(c.latency_ns);
    let theta = Threshold::new(c.theta)?;
    let (left, right) = relations(c, o.seed);

    let mut first = None;
    let mut walls = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (_, stats) = run_join(
            &left,
            &right,
            &model,
            theta,
            c.algo,
            c.threads,
            c.budget_bytes,
            c.inner,
        )?;
        walls.push(stats.wall_nanos);
        first.get_or_insert(stats);
    }
    walls.sort_unstable();
    let median = walls[walls.len() / 2];
    let stats = first.expect("reps >= 1");
    let mut record = RunRecord::new(
        &stats,
        c.left_rows,
        c.right_rows,
        c.dim,
        c.theta,
        c.budget_bytes,
        format!(
            "synthetic:seed={}:dim={}{}",
            o.seed,
            c.dim,
            if c.latency_ns > 0 {
                format!(":latency_ns={}", c.latency_ns)
            } else {
                String::new()
            }
        ),
        o.seed,
    );
    record.wall_nanos = median;
    let elems = (c.left_rows * c.right_rows * c.dim as u64).max(1);
    Ok(BenchRow {
        experiment: exp.id(),
        label: c.label.clone(),
        record,
        repetitions: reps,
        wall_nanos_min: walls[0],
        wall_nanos_max: walls[walls.len() - 1],
        per_fp32_ns: median as f64 / elems as f64,
    })
}

pub fn write_csv<W: Write>(w: W, rows: &[BenchRow]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, row) in rows.iter().enumerate() {
        let cols = row.columns();
        if i == 0 {
            out.write_record(cols.keys())?;
        }
        out.write_record(cols.values().map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }))?;
    }
    out.flush()?;
    Ok(())
}

/// Runs an experiment, reporting progress on `log`, and writes the CSV.
pub fn cmd_bench(
    exp: Experiment,
    scale: Scale,
    o: &BenchOptions,
    out_csv: &Path,
    log: &mut dyn Write,
) -> CliResult<Vec<BenchRow>> {
    if o.threads == 0 {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for c in configs(exp, scale, o) {
        let row = run_config(exp, &c, o)?;
        writeln!(
            log,
            "{} {:<36} median {:>12} ns  matches {:>9}  per-fp32 {:.4} ns",
            exp.id(),
            row.label,
            row.record.wall_nanos,
            row.record.matches,
            row.per_fp32_ns
        )?;
        rows.push(row);
    }
    let f = std::fs::File::create(out_csv)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_csv.display())))?;
    write_csv(std::io::BufWriter::new(f), &rows)?;
    Ok(rows)
}
