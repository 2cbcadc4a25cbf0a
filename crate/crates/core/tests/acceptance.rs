//! Acceptance gate: one PASS/FAIL line per criterion, thresholds pinned below.
//!
//! Runs at full Monte-Carlo scale; expect tens of minutes on one core.
//! `SMBIC_ACCEPTANCE=6,7,8` restricts the run to the listed criteria.
//! The real-data criterion reads the political-blogs edge list from
//! `SMBIC_POLBLOGS` or `data/polblogs.edges` under this crate.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use common::oracle::{self, TinyInstance};
use smbic::bench::{run_point, scaling_probe, BenchRow, ExperimentSpec, Generator, RhoRule, ScalingConfig, SizeRho};
use smbic::criterion::{
    count_statistics, estimate_b_sbm, loglik_bernoulli, loglik_poisson, weighted_pair_counts, BlockMatrix,
};
use smbic::graph::{largest_component, load_edge_list, Indexing};
use smbic::selection::{select_k, RhoSource, SelectionConfig, SubsampleSize};
use smbic::spectral::{spectral_fit, truncated_svd, Assignment, DegreeEstimates, Labeling, Model, SvdConfig};
use smbic::subsample::{extract_subadjacency, sample_nodes};
use smbic::synth::{sample_dcsbm, sample_gsbm_with_outliers, sample_sbm, DcsbmParams, OutlierParams, SbmParams};

// Criterion 1
const T1_REPLICATES: usize = 100;
const T1_PROB_LARGE: f64 = 0.95;
const T1_PROB_SMALL_DENSE: f64 = 0.95;
const T1_PROB_SMALL_SPARSE: f64 = 0.60;
const T1_MEAN_SMALL_SPARSE: (f64, f64) = (4.5, 5.1);
const T1_BUDGET_SECONDS: f64 = 30.0 * 60.0;
// Criterion 2
const T2_REPLICATES: usize = 100;
const T2_SPARSE_BAND: (f64, f64) = (0.55, 0.95);
const T2_DENSE_MIN: f64 = 0.95;
// Criterion 3
const T3_REPLICATES: usize = 100;
const T3_PROB_M100: f64 = 0.90;
const T3_PROB_M20: f64 = 0.95;
// Criterion 4
const T4_REPLICATES: usize = 50;
const T4_PROB: f64 = 0.90;
// Criterion 5
const BLOGS_SEEDS: u64 = 10;
const BLOGS_MIN_HITS: usize = 8;
// Criterion 6
const ORACLE_INSTANCES: u64 = 200;
const ORACLE_REL_TOL: f64 = 1e-9;
// Criterion 7
const SVD_MATRICES: u64 = 50;
const SVD_ANGLE_TOL: f64 = 1e-6;
// Criterion 8
const OPT_INSTANCES: u64 = 100;
const OPT_STEP: f64 = 1e-3;
// Criterion 9
const SCALING_N: usize = 500;
const SCALING_SIZES: [usize; 4] = [2000, 4000, 8000, 16000];
const SCALING_REPS: usize = 3;
const SCALING_SLOPE: (f64, f64) = (0.8, 1.4);
// Criterion 10
const MANY_THREADS: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn spec(generator: Generator, seed: u64, replicates: usize) -> ExperimentSpec {
    ExperimentSpec {
        generator,
        replicates,
        seed,
        ..ExperimentSpec::default()
    }
}

fn run_grid(spec: &ExperimentSpec) -> Vec<BenchRow> {
    spec.validate().expect("acceptance grid is valid");
    spec.grid().iter().enumerate().map(|(i, p)| run_point(spec, p, i)).collect()
}

fn cell(r: &BenchRow) -> String {
    let mut s = format!("K0={} N={} zeta={}", r.point.k0, r.point.num_nodes, r.point.zeta);
    if let Some(a) = r.point.alpha {
        s.push_str(&format!(" alpha={a}"));
    }
    if r.point.m > 0 {
        s.push_str(&format!(" m={}", r.point.m));
    }
    format!("{s}: prob={:.2} mean={:.2}", r.prob, r.mean_k)
}

fn binomial_se(p: f64, t: usize) -> f64 {
    (p * (1.0 - p) / t as f64).sqrt()
}

fn table1() -> Outcome {
    let start = Instant::now();
    let s = ExperimentSpec {
        k0: vec![2, 3, 4, 5],
        num_nodes: vec![500, 2000],
        zeta: vec![1.0, 1.5, 2.0],
        ..spec(Generator::Sbm, 1, T1_REPLICATES)
    };
    let rows = run_grid(&s);
    let elapsed = start.elapsed().as_secs_f64();
    let mut failures = Vec::new();
    for r in rows.iter().filter(|r| r.point.num_nodes == 2000) {
        if r.prob < T1_PROB_LARGE {
            failures.push(cell(r));
        }
    }
    let small5: Vec<&BenchRow> = rows
        .iter()
        .filter(|r| r.point.num_nodes == 500 && r.point.k0 == 5)
        .collect();
    for r in &small5 {
        let ok = if r.point.zeta == 2.0 {
            r.prob >= T1_PROB_SMALL_DENSE
        } else if r.point.zeta == 1.0 {
            r.prob >= T1_PROB_SMALL_SPARSE
                && (T1_MEAN_SMALL_SPARSE.0..=T1_MEAN_SMALL_SPARSE.1).contains(&r.mean_k)
        } else {
            true
        };
        if !ok {
            failures.push(cell(r));
        }
    }
    for w in small5.windows(2) {
        let se = binomial_se(w[0].prob, T1_REPLICATES).max(binomial_se(w[1].prob, T1_REPLICATES));
        if w[1].prob < w[0].prob - se {
            failures.push(format!("not monotone in zeta: {} then {}", cell(w[0]), cell(w[1])));
        }
    }
    if elapsed > T1_BUDGET_SECONDS {
        failures.push(format!("took {elapsed:.0}s"));
    }
    let summary = format!("{} cells in {elapsed:.0}s", rows.len());
    if failures.is_empty() {
        Outcome::new(true, summary)
    } else {
        Outcome::new(false, format!("{summary}; failing: {}", failures.join("; ")))
    }
}

fn table2() -> Outcome {
    let run = |coef: f64| {
        let s = ExperimentSpec {
            k0: vec![5],
            num_nodes: vec![1000],
            zeta: vec![1.5],
            rho: RhoRule { coef, exponent: -0.5 },
            // n = ceil(1.5 sqrt(N) ln N) whatever the generating density
            size_rho: SizeRho::Rule(RhoRule {
                coef: 1.0,
                exponent: -0.5,
            }),
            ..spec(Generator::Sbm, 2, T2_REPLICATES)
        };
        run_grid(&s).remove(0)
    };
    let sparse = run(0.5);
    let dense = run(1.5);
    let ok_sparse = (T2_SPARSE_BAND.0..=T2_SPARSE_BAND.1).contains(&sparse.prob);
    let ok_dense = dense.prob >= T2_DENSE_MIN;
    Outcome::new(
        ok_sparse && ok_dense,
        format!(
            "rho=0.5/sqrt(N) n={} prob={:.2} (want [{}, {}]); rho=1.5/sqrt(N) prob={:.2} (want >= {})",
            sparse.subsample_size, sparse.prob, T2_SPARSE_BAND.0, T2_SPARSE_BAND.1, dense.prob, T2_DENSE_MIN
        ),
    )
}

fn table3() -> Outcome {
    let heavy = ExperimentSpec {
        k0: vec![5],
        num_nodes: vec![3000],
        zeta: vec![1.5],
        m: vec![100],
        ..spec(Generator::Gsbm, 3, T3_REPLICATES)
    };
    let light = ExperimentSpec {
        k0: vec![2, 3, 4, 5],
        m: vec![20],
        ..heavy.clone()
    };
    let mut failures = Vec::new();
    let mut cells = Vec::new();
    for r in run_grid(&heavy) {
        if r.prob < T3_PROB_M100 {
            failures.push(cell(&r));
        }
        cells.push(cell(&r));
    }
    for r in run_grid(&light) {
        if r.prob < T3_PROB_M20 {
            failures.push(cell(&r));
        }
        cells.push(cell(&r));
    }
    if failures.is_empty() {
        Outcome::new(true, cells.join("; "))
    } else {
        Outcome::new(false, format!("failing: {}", failures.join("; ")))
    }
}

fn dcsbm_table() -> Outcome {
    let s = ExperimentSpec {
        k0: vec![2, 3, 4, 5, 6],
        num_nodes: vec![3000],
        zeta: vec![1.5],
        alpha: vec![0.4, 0.8],
        beta: 0.2,
        model: Some(Model::Dcsbm),
        ..spec(Generator::Dcsbm, 5, T4_REPLICATES)
    };
    let rows = run_grid(&s);
    let failures: Vec<String> = rows.iter().filter(|r| r.prob < T4_PROB).map(cell).collect();
    if failures.is_empty() {
        Outcome::new(true, format!("{} cells at prob >= {T4_PROB}", rows.len()))
    } else {
        Outcome::new(false, format!("failing: {}", failures.join("; ")))
    }
}

fn polblogs() -> Outcome {
    let path = std::env::var_os("SMBIC_POLBLOGS")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/polblogs.edges"));
    if !path.exists() {
        return Outcome::new(
            false,
            format!("political-blogs edge list not found at {} (set SMBIC_POLBLOGS)", path.display()),
        );
    }
    let g = match load_edge_list(&path, Indexing::ZeroBased) {
        Ok(g) => g,
        Err(e) => return Outcome::new(false, format!("cannot load {}: {e}", path.display())),
    };
    let (g, _) = largest_component(&g);
    let mut k_hats = Vec::new();
    for seed in 0..BLOGS_SEEDS {
        let cfg = SelectionConfig {
            model: Model::Dcsbm,
            seed,
            subsample: SubsampleSize::Rule {
                zeta: 1.5,
                rho: RhoSource::Estimated,
            },
            ..SelectionConfig::default()
        };
        match select_k(&g, &cfg) {
            Ok(r) => k_hats.push(r.k_hat),
            Err(e) => return Outcome::new(false, format!("seed {seed}: {e}")),
        }
    }
    let hits = k_hats.iter().filter(|&&k| k == 2).count();
    Outcome::new(
        hits >= BLOGS_MIN_HITS,
        format!("N={} K_hat per seed {k_hats:?}: {hits}/{BLOGS_SEEDS} equal 2", g.num_nodes()),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut conservation_failures = 0;
    for seed in 0..ORACLE_INSTANCES {
        let n_nodes = 2 + (seed as usize * 7) % 19;
        let n_sel = 1 + (seed as usize * 5) % n_nodes;
        let k = 1 + (seed as usize) % 4;
        let density = 0.05 + 0.9 * ((seed * 37) % 100) as f64 / 100.0;
        let t = TinyInstance::random(0xACCE_0000 + seed, n_nodes, n_sel, k, density);
        let a = t.sub_adjacency();
        let lab = Labeling::new(t.labels.clone(), k).unwrap();
        let c = count_statistics(&a, &lab).unwrap();
        if c.n_pairs.upper().map(|e| e.2).sum::<u64>() != c.m || c.m as usize != t.pairs().len() {
            conservation_failures += 1;
        }
        let b = BlockMatrix::from_fn(k, |x, y| t.b[x][y]);
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1.0);
        worst = worst.max(rel(
            loglik_bernoulli(&c, &b),
            oracle::brute_force_loglik_bernoulli(&t, &t.labels, &t.b),
        ));
        let psi = DegreeEstimates {
            psi_hat: t.psi.clone(),
            zero_rows: vec![],
        };
        let w = weighted_pair_counts(&a, &lab, &psi).unwrap();
        worst = worst.max(rel(
            loglik_poisson(&c, &w, &b),
            oracle::brute_force_loglik_poisson(&t, &t.labels, &t.b, &t.psi),
        ));
    }
    Outcome::new(
        worst <= ORACLE_REL_TOL && conservation_failures == 0,
        format!(
            "{ORACLE_INSTANCES} instances: worst relative error {worst:.2e}, {conservation_failures} conservation failures"
        ),
    )
}

fn svd_correctness() -> Outcome {
    let cfg = SvdConfig {
        tol: Some(1e-12),
        max_power_iters: 2000,
        ..SvdConfig::default()
    };
    let mut worst: f64 = 0.0;
    for seed in 0..SVD_MATRICES {
        let rows = 20 + (seed as usize * 61) % 281;
        let cols = (5 + (seed as usize * 17) % 96).min(rows);
        let k = 1 + (seed as usize) % 5;
        let a = oracle::random_sub_adjacency(0x5D0 + seed, rows, cols, 1 + (seed as usize) % 6);
        let reference = oracle::dense_svd_reference(&oracle::dense_of(&a), k);
        let emb = match truncated_svd(&a, k, &cfg, seed) {
            Ok(e) => e,
            Err(e) => return Outcome::new(false, format!("seed {seed}: {e}")),
        };
        let cols_of: Vec<Vec<f64>> = (0..k).map(|c| emb.vectors.column(c).iter().copied().collect()).collect();
        worst = worst.max(oracle::subspace_distance(&cols_of, &reference.left));
    }
    Outcome::new(
        worst < SVD_ANGLE_TOL,
        format!("{SVD_MATRICES} matrices: largest sin(principal angle) bound {worst:.2e}"),
    )
}

fn plug_in_optimality() -> Outcome {
    let mut violations = 0;
    let mut probes = 0;
    for seed in 0..OPT_INSTANCES {
        let k = 1 + (seed as usize) % 4;
        let t = TinyInstance::random(0x0B7 + seed, 20, 6 + (seed as usize) % 10, k, 0.1 + 0.007 * seed as f64);
        let c = count_statistics(&t.sub_adjacency(), &Labeling::new(t.labels.clone(), k).unwrap()).unwrap();
        let b_hat = estimate_b_sbm(&c).b;
        let best = loglik_bernoulli(&c, &b_hat);
        for (x, y, v) in b_hat.upper().collect::<Vec<_>>() {
            for step in [OPT_STEP, -OPT_STEP] {
                let moved_v = v + step;
                if !(moved_v > 0.0 && moved_v < 1.0) {
                    continue;
                }
                let mut moved = b_hat.clone();
                moved.set(x, y, moved_v);
                probes += 1;
                if loglik_bernoulli(&c, &moved) > best {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(
        violations == 0,
        format!("{OPT_INSTANCES} instances, {probes} perturbations, {violations} increases"),
    )
}

fn scaling() -> Outcome {
    let cfg = ScalingConfig {
        num_nodes: SCALING_SIZES.to_vec(),
        n: SCALING_N,
        reps: SCALING_REPS,
        ..ScalingConfig::default()
    };
    match scaling_probe(&cfg) {
        Ok(table) => {
            let slope = table.slope.unwrap_or(f64::NAN);
            let rows: Vec<String> = table.rows.iter().map(|(n, t)| format!("N={n}: {t:.3}s")).collect();
            Outcome::new(
                (SCALING_SLOPE.0..=SCALING_SLOPE.1).contains(&slope),
                format!("slope {slope:.3} ({})", rows.join(", ")),
            )
        }
        Err(e) => Outcome::new(false, e.to_string()),
    }
}

/// Every stage, run once inside the given pool, serialized for comparison.
fn pipeline_fingerprint(pool: &rayon::ThreadPool) -> Vec<String> {
    pool.install(|| {
        let mut out = Vec::new();
        let base = SbmParams::new(3, 1500, 1500f64.powf(-0.5), 0.15);
        let (g, truth) = sample_sbm(&base, 11).unwrap();
        out.push(format!("sbm {:?} {:?}", g.edges().collect::<Vec<_>>(), truth.labels));
        let (gd, td) = sample_dcsbm(&DcsbmParams { base: base.clone(), alpha: 0.6 }, 12).unwrap();
        out.push(format!("dcsbm {:?} {:?}", gd.edges().collect::<Vec<_>>(), td.psi_star));
        let (go, _) = sample_gsbm_with_outliers(&OutlierParams::new(base.clone(), 30), 13).unwrap();
        out.push(format!("gsbm {:?}", go.edges().collect::<Vec<_>>()));

        let nodes = sample_nodes(g.num_nodes(), 400, 14).unwrap();
        out.push(format!("nodes {:?}", nodes.selected()));
        let a = extract_subadjacency(&g, &nodes).unwrap();
        out.push(format!("fingerprint {}", a.fingerprint()));
        let emb = truncated_svd(&a, 4, &SvdConfig::default(), 15).unwrap();
        out.push(format!("svd {:?} {:?}", emb.sigma, emb.vectors.as_slice()));
        for model in [Model::Sbm, Model::Dcsbm] {
            for assignment in [Assignment::Spectral, Assignment::MajorityLink] {
                let fit = spectral_fit(&a, 3, model, assignment, &Default::default(), 16).unwrap();
                out.push(format!("fit {:?} {:?} {:?}", fit.labeling.labels, fit.wcss, fit.psi));
            }
            let cfg = SelectionConfig {
                model,
                seed: 17,
                subsample: SubsampleSize::explicit(400),
                ..SelectionConfig::default()
            };
            let report = select_k(&gd, &cfg).unwrap().without_timings();
            out.push(serde_json::to_string(&report).unwrap());
        }
        let s = ExperimentSpec {
            k0: vec![3],
            num_nodes: vec![800],
            zeta: vec![1.5],
            ..spec(Generator::Sbm, 18, 6)
        };
        let row = &run_grid(&s)[0];
        out.push(format!("bench {:?} {}", row.k_hats, row.subsample_size));
        out
    })
}

fn determinism() -> Outcome {
    let build = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let single = pipeline_fingerprint(&build(1));
    let many = pipeline_fingerprint(&build(MANY_THREADS));
    let again = pipeline_fingerprint(&build(MANY_THREADS));
    let differing: Vec<usize> = (0..single.len())
        .filter(|&i| single[i] != many[i] || many[i] != again[i])
        .collect();
    Outcome::new(
        differing.is_empty() && single.len() == many.len(),
        format!(
            "{} stages compared across 1 and {MANY_THREADS} threads; differing stages {differing:?}",
            single.len()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "consistency grid (K0 x N x zeta)", table1),
    (2, "density effect", table2),
    (3, "outlier robustness", table3),
    (4, "degree-corrected grid", dcsbm_table),
    (5, "political blogs", polblogs),
    (6, "count likelihoods vs brute force", oracle_equivalence),
    (7, "randomized vs dense SVD", svd_correctness),
    (8, "plug-in estimate optimality", plug_in_optimality),
    (9, "linear scaling in N", scaling),
    (10, "thread-count determinism", determinism),
];

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("SMBIC_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        ran += 1;
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{verdict} [{id:>2}] {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
