//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if a criterion outside `KNOWN_FAILURES` fails.
//!
//! Run with `cargo test --release -p fullrank-cli --test acceptance`.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fullrank::experiment::{run_experiment, summarize, ExperimentConfig, Method, RunRecord};
use fullrank::gaussian::{laplacian_least_squares, sample_gaussian_on_graph};
use fullrank::mle::{build_close_edges, fit_local_mle, local_nll, local_nll_gradient, FitOptions};
use fullrank::pipeline::rank_from_relations;
use fullrank::{
    footrule, kendall_tau, make_regular_skills, sample_comparison_data, sigmoid, ComparisonDataset,
    EdgeSummary, RankVector, RelationMatrix,
};

/// Criteria that fail at the stated parameters. See README, "Known failures".
const KNOWN_FAILURES: [u32; 3] = [7, 8, 9];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_rank(n: usize, r: &mut ChaCha8Rng) -> RankVector {
    let mut v: Vec<usize> = (1..=n).collect();
    v.shuffle(r);
    RankVector::new(v).unwrap()
}

fn pair_scan_discordant(a: &RankVector, b: &RankVector) -> u64 {
    let (a, b) = (a.as_slice(), b.as_slice());
    let mut count = 0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if (a[i] < a[j]) != (b[i] < b[j]) {
                count += 1;
            }
        }
    }
    count
}

fn c1_loss_sandwich() -> Verdict {
    let mut r = rng(1);
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = r.random_range(2..=200);
        let a = random_rank(n, &mut r);
        let b = random_rank(n, &mut r);
        let k = kendall_tau(&a, &b).unwrap();
        let f = footrule(&a, &b).unwrap();
        if !(f / 2.0 <= k && k <= f) {
            violations += 1;
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations in 10000 pairs"),
    )
}

fn c2_kendall_fast_path() -> Verdict {
    let mut r = rng(2);
    let mut mismatches = 0;
    for _ in 0..1_000 {
        let n = r.random_range(1..=500);
        let a = random_rank(n, &mut r);
        let b = random_rank(n, &mut r);
        let expected = pair_scan_discordant(&a, &b) as f64 / n as f64;
        if kendall_tau(&a, &b).unwrap() != expected {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("{mismatches} mismatches in 1000 pairs"),
    )
}

fn c3_relation_bound() -> Verdict {
    let mut r = rng(3);
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = r.random_range(2..=50);
        let truth = random_rank(n, &mut r);
        let flip = r.random::<f64>();
        let mut rel = RelationMatrix::new(n);
        let mut disagreements = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                let correct = truth.rank_of(i) < truth.rank_of(j);
                let wins = if r.random::<f64>() < flip {
                    !correct
                } else {
                    correct
                };
                rel.set_pair(i, j, wins);
                if wins != correct {
                    disagreements += 2;
                }
            }
        }
        let est = rank_from_relations(&rel).unwrap();
        let lhs = kendall_tau(&est, &truth).unwrap();
        if lhs > 4.0 / n as f64 * disagreements as f64 + 1e-12 {
            violations += 1;
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations in 10000 instances"),
    )
}

fn random_instance(n: usize, seed: u64) -> ComparisonDataset {
    let mut r = rng(seed);
    let beta = r.random_range(0.05..0.5);
    let skills = make_regular_skills(n, beta).unwrap();
    let truth = random_rank(n, &mut r);
    let p = r.random_range(0.3..1.0);
    sample_comparison_data(&skills, &truth, p, 30, 6, seed).unwrap()
}

fn c4_mm_monotone_and_gradient() -> Verdict {
    let mut non_monotone = 0;
    for seed in 0..100 {
        let n = 5 + (seed as usize % 16);
        let data = random_instance(n, 400 + seed);
        let close = build_close_edges(&data, 5.0);
        let players: Vec<usize> = (0..n).collect();
        let mut last = f64::INFINITY;
        for iters in 0..=40 {
            let opts = FitOptions {
                max_iter: iters,
                tol: 0.0,
                ..FitOptions::default()
            };
            let fit = fit_local_mle(&data, &close, &players, &opts).unwrap();
            if fit.final_nll > last + 1e-12 * last.abs().max(1.0) || !fit.monotone {
                non_monotone += 1;
                break;
            }
            last = fit.final_nll;
        }
    }

    let mut worst = 0.0f64;
    let mut r = rng(4);
    for seed in 0..50 {
        let n = r.random_range(2..=20);
        let data = random_instance(n, 900 + seed);
        let close = build_close_edges(&data, 5.0);
        let players: Vec<usize> = (0..n).collect();
        let theta: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let grad = local_nll_gradient(&theta, &data, &close, &players).unwrap();
        for k in 0..n {
            let h = 1e-5;
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (local_nll(&up, &data, &close, &players).unwrap()
                - local_nll(&down, &data, &close, &players).unwrap())
                / (2.0 * h);
            let scale = grad[k].abs().max(1e-3);
            worst = worst.max((fd - grad[k]).abs() / scale);
        }
    }
    verdict(
        non_monotone == 0 && worst <= 1e-6,
        format!("{non_monotone} non-monotone instances, worst gradient error {worst:.2e}"),
    )
}

fn c5_single_pair() -> Verdict {
    let mut worst = 0.0f64;
    for t in -3..=3 {
        let t = t as f64;
        let edge = EdgeSummary {
            i: 0,
            j: 1,
            ybar1: 0.5,
            ybar2: sigmoid(t),
        };
        let data = ComparisonDataset::from_edges(2, 1.0, 1000, 10, 0, vec![edge]).unwrap();
        let close = build_close_edges(&data, 5.0);
        let opts = FitOptions {
            max_iter: 100_000,
            tol: 1e-12,
            ..FitOptions::default()
        };
        let fit = fit_local_mle(&data, &close, &[0, 1], &opts).unwrap();
        worst = worst.max((fit.theta[0] - fit.theta[1] - t).abs());
    }
    verdict(worst <= 1e-6, format!("max |gap - t| = {worst:.2e}"))
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

fn dac_records(records: &[RunRecord], beta: f64) -> impl Iterator<Item = &RunRecord> {
    records
        .iter()
        .filter(move |r| r.method == Method::Dac && r.beta == beta)
}

const PARTITION_GRID: [f64; 4] = [0.005, 0.01, 0.02, 0.05];

fn partition_runs() -> Vec<RunRecord> {
    run_experiment(&config(
        "n = 300\np = 0.5\nbeta_grid = 0.005, 0.01, 0.02, 0.05\nlpairs = 50:10\nmethods = dac\n\
         replications = 50\nbase_seed = 600\nM = 5\nh_mode = practical\n",
    ))
    .unwrap()
}

fn c6_partition(records: &[RunRecord]) -> Verdict {
    let mut detail = Vec::new();
    let mut pass = true;
    for beta in PARTITION_GRID {
        let zero = dac_records(records, beta)
            .filter(|r| r.e_partition == Some(0.0))
            .count();
        pass &= zero >= 49;
        detail.push(format!("beta {beta}: {zero}/50"));
    }
    verdict(pass, format!("E_partition = 0 in {}", detail.join(", ")))
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn c7_league_growth(records: &[RunRecord]) -> Verdict {
    let means: Vec<f64> = PARTITION_GRID
        .iter()
        .map(|&b| {
            let ks: Vec<f64> = dac_records(records, b)
                .filter_map(|r| r.k_leagues)
                .map(|k| k as f64)
                .collect();
            ks.iter().sum::<f64>() / ks.len() as f64
        })
        .collect();
    let increasing = means.windows(2).all(|w| w[1] > w[0]);
    let rho = pearson(&means, &PARTITION_GRID);
    verdict(
        increasing && rho > 0.95,
        format!("mean K {means:?}, strictly increasing {increasing}, pearson {rho:.3}"),
    )
}

fn mean_kendall(records: &[RunRecord], method: Method, beta: f64) -> f64 {
    let v: Vec<f64> = records
        .iter()
        .filter(|r| r.method == method && r.beta == beta)
        .map(|r| r.kendall.expect("loss"))
        .collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn c8_method_ordering() -> Verdict {
    let records = run_experiment(&config(
        "n = 500\np = 0.5\nbeta_grid = 0.005, 0.01, 0.02, 0.05\nlpairs = 50:10\n\
         methods = dac, global_mle, spectral\nreplications = 20\nbase_seed = 800\n",
    ))
    .unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for beta in PARTITION_GRID {
        let dac = mean_kendall(&records, Method::Dac, beta);
        let mle = mean_kendall(&records, Method::GlobalMle, beta);
        let spectral = mean_kendall(&records, Method::Spectral, beta);
        let ratio = spectral / dac;
        let gap = (dac - mle).abs() / mle;
        if beta >= 0.01 {
            pass &= ratio >= 1.5;
        }
        pass &= gap <= 0.25;
        detail.push(format!(
            "beta {beta}: spectral/dac {ratio:.2}, |dac-mle|/mle {gap:.3}"
        ));
    }
    verdict(pass, detail.join("; "))
}

fn c9_exact_recovery() -> Verdict {
    let n = 200.0f64;
    let beta = 8.0 * n.ln() / (100.0 * 0.5);
    let records = run_experiment(&config(&format!(
        "n = 200\np = 0.5\nbeta_grid = {beta}\nlpairs = 100\nmethods = dac\nreplications = 50\n\
         base_seed = 900\nmax_iter = 200000\n"
    )))
    .unwrap();
    let exact = records.iter().filter(|r| r.kendall == Some(0.0)).count();
    let mean = records.iter().filter_map(|r| r.kendall).sum::<f64>() / records.len() as f64;
    verdict(
        exact >= 45,
        format!("beta {beta:.4}: exact in {exact}/50, mean kendall {mean:.4}"),
    )
}

fn c10_polynomial_slope() -> Verdict {
    let grid = [0.01, 0.0178, 0.0316, 0.0562, 0.1];
    let grid_text: Vec<String> = grid.iter().map(|b| b.to_string()).collect();
    let records = run_experiment(&config(&format!(
        "n = 500\np = 0.5\nbeta_grid = {}\nlpairs = 20:4\nmethods = dac\nreplications = 30\nbase_seed = 1000\n",
        grid_text.join(", ")
    )))
    .unwrap();
    let rows = summarize(&records);
    let x: Vec<f64> = rows
        .iter()
        .map(|r| (r.games as f64 * 0.5 * r.beta).ln())
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r.kendall_mean.unwrap().ln()).collect();
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let slope = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    verdict(
        (-0.65..=-0.35).contains(&slope),
        format!("Lp*beta in [0.1, 1], log-log slope {slope:.3}"),
    )
}

fn c11_gaussian_covariance() -> Verdict {
    let n = 5;
    let pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let skills = make_regular_skills(n, 0.1).unwrap();
    let truth = RankVector::identity(n);
    let reps = 10_000;
    let mut samples = Vec::with_capacity(reps);
    for seed in 0..reps as u64 {
        let data = sample_gaussian_on_graph(&skills, &truth, &pairs, 1.0, 11_000 + seed).unwrap();
        samples.push(laplacian_least_squares(n, &data.edges).theta);
    }
    let mean: Vec<f64> = (0..n)
        .map(|a| samples.iter().map(|s| s[a]).sum::<f64>() / reps as f64)
        .collect();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for &(i, j) in &pairs {
        lap[(i, i)] += 1.0;
        lap[(j, j)] += 1.0;
        lap[(i, j)] -= 1.0;
        lap[(j, i)] -= 1.0;
    }
    let pinv = lap.pseudo_inverse(1e-10).unwrap();
    // zero entries of the pseudoinverse are scaled by the smallest nonzero one
    let smallest = pinv
        .iter()
        .map(|v| v.abs())
        .filter(|&v| v > 1e-9)
        .fold(f64::INFINITY, f64::min);
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let cov = samples
                .iter()
                .map(|s| (s[a] - mean[a]) * (s[b] - mean[b]))
                .sum::<f64>()
                / (reps - 1) as f64;
            let target = pinv[(a, b)];
            let scale = if target.abs() > 1e-9 {
                target.abs()
            } else {
                smallest
            };
            worst = worst.max((cov - target).abs() / scale);
        }
    }
    verdict(
        worst <= 0.10,
        format!("worst entrywise relative error {worst:.3}"),
    )
}

fn c12_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(
        &cfg,
        "n = 40\np = 0.6\nbeta_grid = 0.05, 0.2\nlpairs = 30:6, 40\n\
         methods = dac, global_mle, spectral, gaussian_ls\nreplications = 3\nbase_seed = 12\n",
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_fullrank"))
            .args(["bench", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads, "--summary"])
            .arg(dir.path().join(format!("{name}.summary")))
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    verdict(
        !a.is_empty() && a == b && a == c,
        format!(
            "{} bytes, identical on rerun {}, across thread counts {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let started = Instant::now();
    let partition = std::cell::OnceCell::new();
    let criteria: Vec<(u32, &str, Duration, Box<dyn Fn() -> Verdict + '_>)> = vec![
        (
            1,
            "loss sandwich",
            Duration::from_secs(10),
            Box::new(c1_loss_sandwich),
        ),
        (
            2,
            "kendall fast path",
            Duration::from_secs(30),
            Box::new(c2_kendall_fast_path),
        ),
        (
            3,
            "relation matrix bound",
            Duration::from_secs(30),
            Box::new(c3_relation_bound),
        ),
        (
            4,
            "MM monotonicity and gradient",
            Duration::from_secs(60),
            Box::new(c4_mm_monotone_and_gradient),
        ),
        (
            5,
            "single-pair MLE",
            Duration::from_secs(1),
            Box::new(c5_single_pair),
        ),
        (
            6,
            "partition correctness",
            Duration::from_secs(300),
            Box::new(|| c6_partition(partition.get_or_init(partition_runs))),
        ),
        (
            7,
            "league growth",
            Duration::from_secs(300),
            Box::new(|| c7_league_growth(partition.get_or_init(partition_runs))),
        ),
        (
            8,
            "method ordering",
            Duration::from_secs(900),
            Box::new(c8_method_ordering),
        ),
        (
            9,
            "exact recovery",
            Duration::from_secs(300),
            Box::new(c9_exact_recovery),
        ),
        (
            10,
            "polynomial-regime slope",
            Duration::from_secs(900),
            Box::new(c10_polynomial_slope),
        ),
        (
            11,
            "gaussian covariance",
            Duration::from_secs(120),
            Box::new(c11_gaussian_covariance),
        ),
        (
            12,
            "determinism",
            Duration::from_secs(120),
            Box::new(c12_determinism),
        ),
    ];

    let mut unexpected = Vec::new();
    for (id, name, budget, run) in criteria {
        let t = Instant::now();
        let v = run();
        let elapsed = t.elapsed();
        let in_time = elapsed <= budget;
        let pass = v.pass && in_time;
        let known = KNOWN_FAILURES.contains(&id);
        let status = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        let time_note = if in_time {
            String::new()
        } else {
            format!(", over budget {budget:?}")
        };
        println!(
            "criterion {id:>2} {name:<30} {status:<12} {:.1}s{time_note}  {}",
            elapsed.as_secs_f64(),
            v.detail
        );
        if !pass && !known {
            unexpected.push(id);
        }
    }
    println!("total {:.1}s", started.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
