use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vecjoin_cli::bench::{cmd_bench, BenchOptions, Experiment, Scale};
use vecjoin_cli::commands::{
    cmd_calibrate, cmd_estimate, cmd_gen, cmd_join, cmd_topk, AlgoArg, InnerArg, JoinArgs,
};
use vecjoin_cli::formats::parse_bytes;
use vecjoin_cli::model_spec::ModelSpec;
use vecjoin_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "vecjoin",
    version,
    about = "Cosine-threshold joins over embedded relations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write `rows` synthetic tokens `tok_<seed>_<i>`, one per line.
    Gen {
        #[arg(long)]
        rows: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Join two token files on cosine similarity >= theta.
    Join {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// synthetic:seed=<u64>:dim=<n>[:latency_ns=<n>] or vec:<path>[:oov=error|synthetic]
        #[arg(long)]
        model: ModelSpec,
        #[arg(long, allow_negative_numbers = true)]
        theta: f32,
        #[arg(long, value_enum, default_value_t = AlgoArg::Tensor)]
        algo: AlgoArg,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Per-worker similarity buffer budget, e.g. 1048576 or 64MB.
        #[arg(long, default_value = "64MB", value_parser = parse_bytes)]
        budget: u64,
        /// Which relation the nested-loop formulations keep in the inner loop.
        #[arg(long, value_enum, default_value_t = InnerArg::Auto)]
        inner: InnerArg,
        /// Cost parameters JSON used by --algo auto.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Matches CSV (stdout if omitted).
        #[arg(long)]
        out_matches: Option<PathBuf>,
        /// Run record JSON.
        #[arg(long)]
        out_stats: Option<PathBuf>,
    },
    /// Print the k tokens of a relation most similar to a probe.
    Topk {
        #[arg(long)]
        model: ModelSpec,
        #[arg(long)]
        relation: PathBuf,
        #[arg(long)]
        probe: String,
        #[arg(long, short, default_value_t = 15)]
        k: usize,
    },
    /// Cost estimates of the three formulations and the chosen plan, as JSON.
    Estimate {
        #[arg(long)]
        left_rows: u64,
        #[arg(long)]
        right_rows: u64,
        #[arg(long)]
        dim: usize,
        #[arg(long, value_parser = parse_bytes)]
        budget: u64,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Measure cost parameters on this machine and print them as JSON.
    Calibrate {
        #[arg(long)]
        model: ModelSpec,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run one experiment of the benchmark suite and write a CSV.
    Bench {
        #[arg(value_enum)]
        experiment: Experiment,
        #[arg(long, value_enum, default_value_t = Scale::Desk)]
        scale: Scale,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(3..))]
        reps: u64,
        #[arg(long, default_value_t = 8)]
        threads: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.4, allow_negative_numbers = true)]
        theta: f32,
        #[arg(long, default_value_t = 1000)]
        latency_ns: u64,
    },
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&PathBuf>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> CliResult<()> {
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    match cmd {
        Command::Gen { rows, seed, out } => cmd_gen(rows, seed, &out),
        Command::Join {
            left,
            right,
            model,
            theta,
            algo,
            threads,
            budget,
            inner,
            params,
            out_matches,
            out_stats,
        } => {
            let args = JoinArgs {
                left,
                right,
                model,
                theta,
                algo,
                threads,
                budget_bytes: budget,
                inner,
                params,
                out_matches,
                out_stats,
            };
            cmd_join(&args, &mut stdout).map(|_| ())
        }
        Command::Topk {
            model,
            relation,
            probe,
            k,
        } => cmd_topk(&model, &relation, &probe, k, &mut stdout),
        Command::Estimate {
            left_rows,
            right_rows,
            dim,
            budget,
            params,
        } => write_json(
            &cmd_estimate(left_rows, right_rows, dim, budget, params.as_deref())?,
            None,
        ),
        Command::Calibrate {
            model,
            samples,
            out,
        } => write_json(&cmd_calibrate(&model, samples)?, out.as_ref()),
        Command::Bench {
            experiment,
            scale,
            out,
            reps,
            threads,
            seed,
            theta,
            latency_ns,
        } => {
            let o = BenchOptions {
                reps: reps as usize,
                threads,
                seed,
                theta,
                latency_ns,
                ..BenchOptions::default()
            };
            cmd_bench(experiment, scale, &o, &out, &mut std::io::stderr()).map(|_| ())
        }
    }
}

fn one_line(s: &str) -> String {
    let first = s
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim();
    first.strip_prefix("error: ").unwrap_or(first).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {}", one_line(&e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
