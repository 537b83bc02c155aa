//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs sequentially so timings are not disturbed by other tests.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vecjoin::cost::{estimate_nlj_naive, estimate_nlj_prefetch, estimate_tensor, CostParams};
use vecjoin::linalg::{cosine_vv, normalize_rows, tile_similarity};
use vecjoin::{
    make_raw_relation, nlj_naive, nlj_prefetch, tensor_join, EmbeddedRelation, EmbeddingModel,
    InnerChoice, JoinStats, MatchSet, RawRelation, Threshold, Tile,
};
use vecjoin_cli::bench::{cmd_bench, BenchOptions, Experiment, Scale};
use vecjoin_cli::commands::gen_tokens;

const MB: u64 = 1 << 20;
const MARGIN: f32 = 1e-4;

struct Outcome {
    pass: bool,
    /// A failure proven unattainable for any implementation of the stated
    /// formulas: reported as FAIL but does not fail the process.
    known: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        known: false,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers

fn relation(name: &str, rows: u64, seed: u64) -> RawRelation {
    make_raw_relation(name, gen_tokens(rows, seed))
}

type Triple = (u64, u64, f32);

/// Brute force: a private model instance, raw (unnormalized) embeddings and
/// the scalar cosine for every pair.
fn oracle_sims(seed: u64, dim: usize, left: &RawRelation, right: &RawRelation) -> Vec<Triple> {
    let m = EmbeddingModel::synthetic(seed, dim).unwrap();
    let l: Vec<Vec<f32>> = left.tokens().iter().map(|t| m.embed(t).unwrap()).collect();
    let r: Vec<Vec<f32>> = right.tokens().iter().map(|t| m.embed(t).unwrap()).collect();
    let mut out = Vec::with_capacity(l.len() * r.len());
    for (i, a) in l.iter().enumerate() {
        for (j, b) in r.iter().enumerate() {
            out.push((i as u64, j as u64, cosine_vv(a, b).unwrap()));
        }
    }
    out
}

/// Midpoint of the gap nearest the requested quantile that is at least
/// `2·MARGIN` wide, so every attained similarity is `MARGIN` away.
fn threshold_with_margin(sims: &[Triple], quantile: f64) -> Option<f32> {
    let mut v: Vec<f32> = sims.iter().map(|t| t.2).collect();
    v.sort_by(f32::total_cmp);
    let target = ((v.len() as f64 * quantile) as usize).min(v.len() - 1);
    let wide = |i: usize| v[i + 1] - v[i] >= 2.0 * MARGIN;
    let i = (target..v.len() - 1)
        .find(|&i| wide(i))
        .or_else(|| (0..target).rev().find(|&i| wide(i)))?;
    let theta = (v[i] + v[i + 1]) / 2.0;
    v.iter()
        .all(|s| (s - theta).abs() >= MARGIN)
        .then_some(theta)
}

fn agrees(got: &MatchSet, want: &[Triple]) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("{} matches, oracle has {}", got.len(), want.len()));
    }
    for (m, w) in got.iter().zip(want) {
        if (m.left, m.right) != (w.0, w.1) {
            return Err(format!(
                "pair ({},{}) where oracle has ({},{})",
                m.left, m.right, w.0, w.1
            ));
        }
        if (m.similarity - w.2).abs() > 1e-5 {
            return Err(format!("similarity {} vs oracle {}", m.similarity, w.2));
        }
    }
    Ok(())
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    v[v.len() / 2]
}

/// Median wall time over `reps` runs of `f`.
fn median_wall(reps: usize, mut f: impl FnMut() -> JoinStats) -> u64 {
    median((0..reps).map(|_| f().wall_nanos).collect())
}

fn secs(ns: u64) -> String {
    format!("{:.3}s", ns as f64 / 1e9)
}

// ---------------------------------------------------------------------------
// Criteria 1 and 2 share their instances.

struct Instance {
    seed: u64,
    dim: usize,
    left: RawRelation,
    right: RawRelation,
    theta: f32,
    want: Vec<Triple>,
}

fn instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut out = Vec::new();
    while out.len() < 50 {
        let k = out.len();
        let dim = [4, 64, 100][k % 3];
        let seed: u64 = rng.gen();
        let left = make_raw_relation(
            "R",
            (0..rng.gen_range(8..=256)).map(|i| format!("l{k}_{i}")),
        );
        let right = make_raw_relation(
            "S",
            (0..rng.gen_range(8..=256)).map(|i| format!("r{k}_{i}")),
        );
        let sims = oracle_sims(seed, dim, &left, &right);
        let Some(theta) = threshold_with_margin(&sims, rng.gen_range(0.9..0.999)) else {
            continue;
        };
        let want = sims.into_iter().filter(|t| t.2 >= theta).collect();
        out.push(Instance {
            seed,
            dim,
            left,
            right,
            theta,
            want,
        });
    }
    out
}

fn criteria_1_and_2(insts: &[Instance]) -> (Outcome, Outcome) {
    let start = Instant::now();
    let (mut runs, mut exact_fail, mut call_fail) = (0, Vec::new(), Vec::new());
    let mut total_matches = 0;
    for (k, inst) in insts.iter().enumerate() {
        let th = Threshold::new(inst.theta).unwrap();
        let model = EmbeddingModel::synthetic(inst.seed, inst.dim).unwrap();
        let (nl, nr) = (inst.left.len() as u64, inst.right.len() as u64);
        let (outer, inner) = if nl < nr { (nr, nl) } else { (nl, nr) };
        total_matches += inst.want.len();
        let mut check = |label: String, res: vecjoin::Result<(MatchSet, JoinStats)>, calls: u64| {
            runs += 1;
            match res {
                Ok((ms, st)) => {
                    if let Err(e) = agrees(&ms, &inst.want) {
                        exact_fail.push(format!("#{k} {label}: {e}"));
                    }
                    if st.model_calls() != calls {
                        call_fail.push(format!(
                            "#{k} {label}: {} calls, want {calls}",
                            st.model_calls()
                        ));
                    }
                }
                Err(e) => exact_fail.push(format!("#{k} {label}: error {e}")),
            }
        };
        check(
            "naive".into(),
            nlj_naive(&inst.left, &inst.right, &model, th, InnerChoice::Auto),
            outer + outer * inner,
        );
        let whole = nl * nr * 4;
        for threads in [1, 4] {
            check(
                format!("prefetch t{threads}"),
                nlj_prefetch(
                    &inst.left,
                    &inst.right,
                    &model,
                    th,
                    threads,
                    InnerChoice::Auto,
                ),
                nl + nr,
            );
            for (name, budget) in [
                ("whole", whole),
                ("quarter", whole / 4),
                ("4096-elem", 4096 * 4),
            ] {
                check(
                    format!("tensor {name} t{threads}"),
                    tensor_join(&inst.left, &inst.right, &model, th, budget, threads),
                    nl + nr,
                );
            }
        }
    }
    let elapsed = start.elapsed();
    let summary = format!(
        "{} instances, {runs} runs, {total_matches} oracle matches, {:.1}s",
        insts.len(),
        elapsed.as_secs_f64()
    );
    let c1 = if exact_fail.is_empty() && elapsed.as_secs() < 60 {
        outcome(
            true,
            format!("100% agreement with brute-force oracle; {summary}"),
        )
    } else {
        outcome(
            false,
            format!(
                "{} disagreements ({summary}); first: {:?}",
                exact_fail.len(),
                exact_fail.first()
            ),
        )
    };
    let c2 = if call_fail.is_empty() {
        outcome(true, format!("exact call counts on all {runs} runs (naive |outer|+|outer||inner|, others |R|+|S|)"))
    } else {
        outcome(
            false,
            format!("{} mismatches; first: {}", call_fail.len(), call_fail[0]),
        )
    };
    (c1, c2)
}

// ---------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    let (mut strict, mut boundary, mut boundary_strict) = (0u32, 0u32, 0u32);
    let (mut mono_checks, mut fails) = (0u32, Vec::new());
    type Est = fn(u64, u64, usize, &CostParams) -> f64;
    // A budget that holds the whole matrix keeps the tensor estimate finite.
    let tensor: Est = |r, s, d, p| estimate_tensor(r, s, d, 1u64 << 40, p);
    for _ in 0..10_000 {
        // The |R| = 2 / |S| = 2 boundary is oversampled on purpose.
        let r: u64 = if rng.gen_bool(0.05) {
            2
        } else {
            rng.gen_range(2..100_000)
        };
        let s: u64 = if rng.gen_bool(0.05) {
            2
        } else {
            rng.gen_range(2..100_000)
        };
        let dim: usize = rng.gen_range(1..1024);
        let p = CostParams {
            access_ns: rng.gen_range(0.0..100.0),
            model_ns: rng.gen_range(1e-3..1e4),
            compare_base_ns: rng.gen_range(0.0..100.0),
            compare_per_dim_ns: rng.gen_range(0.0..10.0),
            tensor_efficiency: rng.gen_range(1e-3..=1.0),
        };
        let naive = estimate_nlj_naive(r, s, dim, &p);
        let pre = estimate_nlj_prefetch(r, s, dim, &p);
        if r * s > r + s {
            strict += 1;
            if pre >= naive {
                fails.push(format!("prefetch {pre} !< naive {naive} at R={r} S={s}"));
            }
        } else {
            boundary += 1;
            boundary_strict += u32::from(pre < naive);
        }

        for (name, f) in [
            ("naive", estimate_nlj_naive as Est),
            ("prefetch", estimate_nlj_prefetch as Est),
            ("tensor", tensor),
        ] {
            let base = f(r, s, dim, &p);
            let with = |q: CostParams| f(r, s, dim, &q);
            let variants = [
                ("R", f(r + 1, s, dim, &p)),
                ("S", f(r, s + 1, dim, &p)),
                ("dim", f(r, s, dim + 1, &p)),
                (
                    "A",
                    with(CostParams {
                        access_ns: p.access_ns + 1.0,
                        ..p
                    }),
                ),
                (
                    "M",
                    with(CostParams {
                        model_ns: p.model_ns + 1.0,
                        ..p
                    }),
                ),
                (
                    "c0",
                    with(CostParams {
                        compare_base_ns: p.compare_base_ns + 1.0,
                        ..p
                    }),
                ),
                (
                    "c1",
                    with(CostParams {
                        compare_per_dim_ns: p.compare_per_dim_ns + 1.0,
                        ..p
                    }),
                ),
            ];
            for (arg, v) in variants {
                mono_checks += 1;
                if v < base {
                    fails.push(format!(
                        "{name} decreases in {arg} at R={r} S={s} dim={dim}"
                    ));
                }
            }
        }
    }
    let summary = format!(
        "prefetch < naive on all {strict} draws with |R||S| > |R|+|S|; {mono_checks} monotonicity checks"
    );
    if !fails.is_empty() {
        return outcome(
            false,
            format!("{} violations; first: {}", fails.len(), fails[0]),
        );
    }
    if boundary_strict < boundary {
        return Outcome {
            pass: false,
            known: true,
            detail: format!(
                "{summary}; but at |R|=|S|=2 the difference M(|R||S|-|R|-|S|) is exactly 0, so strict < is \
                 unattainable there: held on only {boundary_strict}/{boundary} boundary draws, by fp rounding"
            ),
        };
    }
    outcome(true, summary)
}

// ---------------------------------------------------------------------------

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (l, r) = (relation("R", 4096, 1), relation("S", 4096, 2));
    let model = EmbeddingModel::synthetic(42, 100).unwrap();
    let th = Threshold::new(0.4).unwrap();
    let threads = 8;
    let whole = 4096 * 4096 * 4;
    let mut base: Option<MatchSet> = None;
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, budget) in [
        ("whole", whole),
        ("64MB", 64 * MB),
        ("16MB", 16 * MB),
        ("4MB", 4 * MB),
        ("1MB", MB),
    ] {
        let (ms, st) = tensor_join(&l, &r, &model, th, budget, threads).unwrap();
        let ok_mem = st.peak_buffer_bytes <= threads as u64 * budget;
        let ok_ms = base.as_ref().is_none_or(|b| b.bitwise_eq(&ms));
        pass &= ok_mem && ok_ms;
        notes.push(format!(
            "{name}: peak {}B tiles {}{}",
            st.peak_buffer_bytes,
            st.tiles_executed,
            if ok_ms { "" } else { " MISMATCH" }
        ));
        base.get_or_insert(ms);
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 300.0;
    let n = base.map_or(0, |b| b.len());
    outcome(
        pass,
        format!(
            "{n} matches identical across budgets, peak <= threads x budget [{}], {elapsed:.1}s",
            notes.join("; ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (l, r) = (relation("R", 1024, 1), relation("S", 1024, 2));
    let model = EmbeddingModel::synthetic(42, 100)
        .unwrap()
        .with_latency_ns(1000);
    let th = Threshold::new(0.4).unwrap();
    let naive = median_wall(5, || {
        nlj_naive(&l, &r, &model, th, InnerChoice::Auto).unwrap().1
    });
    let pre = median_wall(5, || {
        nlj_prefetch(&l, &r, &model, th, 1, InnerChoice::Auto)
            .unwrap()
            .1
    });
    let ratio = naive as f64 / pre as f64;
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        ratio >= 10.0 && elapsed < 120.0,
        format!(
            "naive {} / prefetch {} = {ratio:.1}x (gate >= 10x), {elapsed:.1}s",
            secs(naive),
            secs(pre)
        ),
    )
}

fn vector_units() -> Vec<&'static str> {
    #[allow(unused_mut)]
    let mut v = Vec::new();
    #[cfg(target_arch = "x86_64")]
    {
        v.push("sse2");
        for (name, on) in [
            ("avx", std::arch::is_x86_feature_detected!("avx")),
            ("avx2", std::arch::is_x86_feature_detected!("avx2")),
            ("avx512f", std::arch::is_x86_feature_detected!("avx512f")),
        ] {
            if on {
                v.push(name);
            }
        }
    }
    #[cfg(target_arch = "aarch64")]
    v.push("neon");
    v
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let (l, r) = (relation("R", 4096, 1), relation("S", 4096, 2));
    let model = EmbeddingModel::synthetic(42, 100).unwrap();
    let th = Threshold::new(0.4).unwrap();
    let pre = median_wall(5, || {
        nlj_prefetch(&l, &r, &model, th, 8, InnerChoice::Auto)
            .unwrap()
            .1
    });
    let ten = median_wall(5, || tensor_join(&l, &r, &model, th, 64 * MB, 8).unwrap().1);
    let ratio = ten as f64 / pre as f64;
    let elapsed = start.elapsed().as_secs_f64();
    let units = vector_units();
    let detail = format!(
        "tensor {} / prefetch {} = {ratio:.3} (gate <= 0.5), vector units [{}], {elapsed:.1}s",
        secs(ten),
        secs(pre),
        units.join(",")
    );
    if units.is_empty() {
        return outcome(
            true,
            format!("WAIVED (no vector units detected, report-only): {detail}"),
        );
    }
    outcome(ratio <= 0.5 && elapsed < 300.0, detail)
}

fn criterion_7() -> Outcome {
    let model = EmbeddingModel::synthetic(42, 100).unwrap();
    let th = Threshold::new(0.4).unwrap();
    let run = |n: u64| {
        let (l, r) = (relation("R", n, 1), relation("S", n, 2));
        median_wall(5, || {
            nlj_prefetch(&l, &r, &model, th, 8, InnerChoice::Auto)
                .unwrap()
                .1
        })
    };
    let small = run(1024);
    let large = run(4096);
    let ratio = large as f64 / small as f64;
    outcome(
        (8.0..=32.0).contains(&ratio),
        format!(
            "prefetch 4096^2 {} / 1024^2 {} = {ratio:.1} (band [8, 32], ideal 16)",
            secs(large),
            secs(small)
        ),
    )
}

// ---------------------------------------------------------------------------

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        if v.iter().any(|x| x.abs() > 1e-3) {
            return v;
        }
    }
}

fn normalized(name: &str, dim: usize, rows: &[Vec<f32>]) -> EmbeddedRelation {
    let data = rows.iter().flatten().copied().collect();
    normalize_rows(EmbeddedRelation::from_rows(name, dim, data).unwrap()).relation
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    let mut fails: Vec<String> = Vec::new();
    let mut worst = [0f32; 4];
    let n = 10_000;

    // Normalized dot vs cosine.
    for _ in 0..n {
        let dim = rng.gen_range(1..=300);
        let (a, b) = (random_vec(&mut rng, dim), random_vec(&mut rng, dim));
        let er = normalized("x", dim, &[a.clone(), b.clone()]);
        let d: f32 = er.row(0).iter().zip(er.row(1)).map(|(x, y)| x * y).sum();
        let err = (d - cosine_vv(&a, &b).unwrap()).abs();
        worst[0] = worst[0].max(err);
        if err > 1e-5 {
            fails.push(format!("normalized dot off by {err} at dim {dim}"));
        }
    }

    // Block-assembled tiles vs the full pairwise matrix.
    for _ in 0..n {
        let dim = rng.gen_range(1..=64);
        let (nl, nr) = (rng.gen_range(1..=24usize), rng.gen_range(1..=24usize));
        let lrows: Vec<Vec<f32>> = (0..nl).map(|_| random_vec(&mut rng, dim)).collect();
        let rrows: Vec<Vec<f32>> = (0..nr).map(|_| random_vec(&mut rng, dim)).collect();
        let (le, re) = (normalized("L", dim, &lrows), normalized("R", dim, &rrows));
        let (bl, br) = (rng.gen_range(1..=nl), rng.gen_range(1..=nr));
        let mut assembled = vec![f32::NAN; nl * nr];
        let mut buf = vec![0f32; bl * br];
        for l0 in (0..nl).step_by(bl) {
            for r0 in (0..nr).step_by(br) {
                let (lc, rc) = (bl.min(nl - l0), br.min(nr - r0));
                let tile = Tile::new(l0 as u64, lc as u64, r0 as u64, rc as u64);
                tile_similarity(&le, &re, &tile, &mut buf).unwrap();
                for i in 0..lc {
                    for j in 0..rc {
                        assembled[(l0 + i) * nr + r0 + j] = buf[i * rc + j];
                    }
                }
            }
        }
        for i in 0..nl {
            for j in 0..nr {
                let err = (assembled[i * nr + j] - cosine_vv(&lrows[i], &rrows[j]).unwrap()).abs();
                worst[1] = worst[1].max(err);
                if err > 1e-5 || err.is_nan() {
                    fails.push(format!("tile cell ({i},{j}) off by {err}"));
                }
            }
        }
    }

    // Symmetry and scale invariance.
    for _ in 0..n {
        let dim = rng.gen_range(1..=300);
        let (a, b) = (random_vec(&mut rng, dim), random_vec(&mut rng, dim));
        let c = cosine_vv(&a, &b).unwrap();
        let sym = (c - cosine_vv(&b, &a).unwrap()).abs();
        let (alpha, beta) = (
            10f32.powf(rng.gen_range(-3.0..3.0)),
            10f32.powf(rng.gen_range(-3.0..3.0)),
        );
        let sa: Vec<f32> = a.iter().map(|x| x * alpha).collect();
        let sb: Vec<f32> = b.iter().map(|x| x * beta).collect();
        let scale = (c - cosine_vv(&sa, &sb).unwrap()).abs();
        worst[2] = worst[2].max(sym);
        worst[3] = worst[3].max(scale);
        if sym > 1e-5 || scale > 1e-5 {
            fails.push(format!("symmetry {sym} / scale {scale} at dim {dim}"));
        }
    }

    if fails.is_empty() {
        outcome(
            true,
            format!(
                "{n} checks each; max error: normalized-dot {:.1e}, tiles {:.1e}, symmetry {:.1e}, scale {:.1e}",
                worst[0], worst[1], worst[2], worst[3]
            ),
        )
    } else {
        outcome(
            false,
            format!("{} failures; first: {}", fails.len(), fails[0]),
        )
    }
}

// ---------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let dir = std::env::temp_dir().join(format!("vecjoin-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let o = BenchOptions::default();
    let mut log = Vec::new();
    let mut produced = Vec::new();
    for exp in [Experiment::E3, Experiment::E5] {
        let path = dir.join(format!("{}.csv", exp.id()));
        match cmd_bench(exp, Scale::Desk, &o, &path, &mut log) {
            Ok(rows) => produced.push(format!("{} ({} rows)", path.display(), rows.len())),
            Err(e) => return outcome(false, format!("{} failed: {e}", exp.id())),
        }
    }
    for line in String::from_utf8_lossy(&log).lines() {
        println!("    {line}");
    }
    outcome(
        true,
        format!(
            "report-only; not reproduced at desk scale: absolute runtimes, the 5.36x average SIMD gain, the ~35% ordering effect at 1e10 ops, semantic matches of a trained model; CSVs: {}",
            produced.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    // Under `cargo test -- <filter>` style invocations the harness receives
    // arguments; listing requests get an empty list.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let (mut failed, mut known) = (0, Vec::new());
    let mut report = |n: u32, o: Outcome| {
        println!(
            "criterion {n}: {} - {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if o.known {
            known.push(n);
        } else if !o.pass {
            failed += 1;
        }
    };
    let insts = instances();
    let (c1, c2) = criteria_1_and_2(&insts);
    report(1, c1);
    report(2, c2);
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    report(9, criterion_9());
    if !known.is_empty() {
        println!("acceptance: known-unattainable criteria (reported FAIL above): {known:?}");
    }
    if failed == 0 {
        println!("acceptance: no unexpected failures");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
