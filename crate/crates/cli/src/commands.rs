use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vecjoin::cost::{calibrate, choose_plan, CostParams, PlanChoice};
use vecjoin::{
    embed_relation, nlj_naive, nlj_prefetch, tensor_join, top_k, Algo, EmbeddingModel, InnerChoice,
    JoinStats, MatchSet, RawRelation, Threshold,
};

use crate::error::{CliError, CliResult};
use crate::formats::{
    read_token_file, write_matches, write_matches_file, write_token_file, RunRecord,
};
use crate::model_spec::ModelSpec;

/// `tok_<seed>_<i>` for `i` in `0..rows`.
pub fn gen_tokens(rows: u64, seed: u64) -> impl Iterator<Item = String> {
    (0..rows).map(move |i| format!("tok_{seed}_{i}"))
}

pub fn cmd_gen(rows: u64, seed: u64, out: &Path) -> CliResult<()> {
    let tokens: Vec<String> = gen_tokens(rows, seed).collect();
    write_token_file(out, tokens.iter().map(String::as_str))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AlgoArg {
    Naive,
    Prefetch,
    Tensor,
    /// Pick the cheapest formulation under the cost model.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InnerArg {
    Auto,
    Left,
    Right,
}

impl From<InnerArg> for InnerChoice {
    fn from(a: InnerArg) -> Self {
        match a {
            InnerArg::Auto => InnerChoice::Auto,
            InnerArg::Left => InnerChoice::Left,
            InnerArg::Right => InnerChoice::Right,
        }
    }
}

/// Runs one physical formulation.
#[allow(clippy::too_many_arguments)]
pub fn run_join(
    left: &RawRelation,
    right: &RawRelation,
    model: &EmbeddingModel,
    theta: Threshold,
    algo: Algo,
    threads: usize,
    budget_bytes: u64,
    inner: InnerChoice,
) -> CliResult<(MatchSet, JoinStats)> {
    let out = match algo {
        Algo::NaiveNlj => nlj_naive(left, right, model, theta, inner)?,
        Algo::PrefetchNlj => nlj_prefetch(left, right, model, theta, threads, inner)?,
        Algo::Tensor => tensor_join(left, right, model, theta, budget_bytes, threads)?,
        Algo::Selection => return Err(CliError::Usage("selection is not a join algorithm".into())),
    };
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct JoinArgs {
    pub left: PathBuf,
    pub right: PathBuf,
    pub model: ModelSpec,
    pub theta: f32,
    pub algo: AlgoArg,
    pub threads: usize,
    pub budget_bytes: u64,
    pub inner: InnerArg,
    pub params: Option<PathBuf>,
    pub out_matches: Option<PathBuf>,
    pub out_stats: Option<PathBuf>,
}

pub fn read_params(path: Option<&Path>) -> CliResult<CostParams> {
    let Some(path) = path else {
        return Ok(CostParams::default());
    };
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let p: CostParams = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    p.validate()
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Ok(p)
}

/// Joins two token files; matches go to `out_matches` (stdout if unset).
pub fn cmd_join(args: &JoinArgs, stdout: &mut dyn Write) -> CliResult<RunRecord> {
    let theta = Threshold::new(args.theta)?;
    if args.threads == 0 {
        return Err(CliError::Usage("threads must be at least 1".into()));
    }
    let left = read_token_file(&args.left)?;
    let right = read_token_file(&args.right)?;
    let model = args.model.build()?;

    let algo = match args.algo {
        AlgoArg::Naive => Algo::NaiveNlj,
        AlgoArg::Prefetch => Algo::PrefetchNlj,
        AlgoArg::Tensor => Algo::Tensor,
        AlgoArg::Auto => {
            let p = read_params(args.params.as_deref())?;
            choose_plan(
                left.len() as u64,
                right.len() as u64,
                model.dim(),
                args.budget_bytes,
                &p,
            )
            .chosen
        }
    };
    let (matches, stats) = run_join(
        &left,
        &right,
        &model,
        theta,
        algo,
        args.threads,
        args.budget_bytes,
        args.inner.into(),
    )?;

    match &args.out_matches {
        Some(p) => write_matches_file(p, &matches)?,
        None => write_matches(&mut *stdout, &matches)?,
    }
    let record = RunRecord::new(
        &stats,
        left.len() as u64,
        right.len() as u64,
        model.dim(),
        args.theta,
        args.budget_bytes,
        args.model.to_string(),
        args.model.seed(),
    );
    if let Some(p) = &args.out_stats {
        let f = fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        let mut w = std::io::BufWriter::new(f);
        serde_json::to_writer_pretty(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(record)
}

/// Prints `token<TAB>similarity` for the `k` best matches of `probe`.
pub fn cmd_topk(
    model: &ModelSpec,
    relation: &Path,
    probe: &str,
    k: usize,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    if k == 0 {
        return Err(CliError::Usage("k must be at least 1".into()));
    }
    let raw = read_token_file(relation)?;
    let model = model.build()?;
    let er = embed_relation(&model, &raw)?;
    for (token, sim) in top_k(&model, &er, &raw, probe, k)? {
        writeln!(stdout, "{token}\t{sim:.6}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub left_rows: u64,
    pub right_rows: u64,
    pub dim: usize,
    pub budget_bytes: u64,
    pub naive_nlj: f64,
    pub prefetch_nlj: f64,
    pub tensor: f64,
    pub chosen: Algo,
}

pub fn cmd_estimate(
    left_rows: u64,
    right_rows: u64,
    dim: usize,
    budget_bytes: u64,
    params: Option<&Path>,
) -> CliResult<EstimateReport> {
    let p = read_params(params)?;
    let PlanChoice {
        chosen,
        naive_nlj,
        prefetch_nlj,
        tensor,
    } = choose_plan(left_rows, right_rows, dim, budget_bytes, &p);
    Ok(EstimateReport {
        left_rows,
        right_rows,
        dim,
        budget_bytes,
        naive_nlj,
        prefetch_nlj,
        tensor,
        chosen,
    })
}

pub fn cmd_calibrate(model: &ModelSpec, samples: usize) -> CliResult<CostParams> {
    let m = model.build()?;
    Ok(calibrate(&m, m.dim(), samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.txt");
        cmd_gen(2, 7, &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"tok_7_0\ntok_7_1\n");
        cmd_gen(0, 7, &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"");
    }

    #[test]
    fn estimate_echoes_choose_plan() {
        let r = cmd_estimate(10, 10, 4, 400, None).unwrap();
        let c = choose_plan(10, 10, 4, 400, &CostParams::default());
        assert_eq!(r.chosen, c.chosen);
        assert_eq!(r.tensor, c.tensor);
    }

    #[test]
    fn params_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.json");
        fs::write(&p, "{not json").unwrap();
        assert!(matches!(read_params(Some(&p)), Err(CliError::Parse(_))));
        fs::write(
            &p,
            r#"{"access_ns":1,"model_ns":1,"compare_base_ns":1,"compare_per_dim_ns":1,"tensor_efficiency":2}"#,
        )
        .unwrap();
        assert!(matches!(read_params(Some(&p)), Err(CliError::Parse(_))));
        assert!(matches!(
            read_params(Some(&dir.path().join("none"))),
            Err(CliError::Io(_))
        ));
    }
}
