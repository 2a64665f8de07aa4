use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fullrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fullrank"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn simulate(dir: &Path) -> String {
    let path = dir.join("data.json");
    let p = path.to_str().unwrap().to_string();
    let out = fullrank(&[
        "simulate", "--n", "40", "--p", "0.8", "--beta", "0.2", "--L", "40", "--L1", "8", "--seed",
        "3", "--out", &p,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    p
}

#[test]
fn simulate_then_rank_with_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path());
    let truth: Vec<String> = (1..=40).map(|r| r.to_string()).collect();
    let truth = truth.join(",");
    for method in ["dac", "mle", "spectral", "gaussian-ls"] {
        let v = json(&fullrank(&[
            "rank", "--data", &data, "--method", method, "--truth", &truth,
        ]));
        let rank = v["rank"].as_array().unwrap();
        assert_eq!(rank.len(), 40);
        assert!(
            v["kendall"].as_f64().unwrap() < 2.0,
            "{method}: {}",
            v["kendall"]
        );
    }
}

#[test]
fn rank_accepts_h_variants() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path());
    for h in ["practical", "data_driven", "oracle:0.2", "4"] {
        let v = json(&fullrank(&["rank", "--data", &data, "--h", h]));
        assert!(v["details"]["leagues"].is_array());
    }
    let out = fullrank(&["rank", "--data", &data, "--h", "oracle:x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "simulate", "--n", "20", "--p", "0.5", "--beta", "0.1", "--L", "30", "--seed", "9",
    ];
    let a = fullrank(&args);
    let b = fullrank(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn losses_and_rates_report_values() {
    let v = json(&fullrank(&[
        "losses",
        "--estimate",
        "2,1,3",
        "--truth",
        "1,2,3",
        "--k",
        "1",
    ]));
    assert!((v["kendall"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((v["footrule"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!(v["hamming_topk"].is_number());

    let v = json(&fullrank(&[
        "rates", "--n", "1000", "--p", "0.1", "--beta", "0.001", "--L", "50", "--sigma2", "1",
    ]));
    assert_eq!(v["btl"]["regime"], "polynomial");
    assert!((v["btl"]["value"].as_f64().unwrap() - 200f64.sqrt()).abs() < 1e-9);
    assert!(v["gaussian"].is_object());
}

#[test]
fn bench_with_overrides_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.cfg");
    std::fs::write(
        &cfg,
        "n = 20\np = 0.7\nbeta_grid = 0.1\nlpairs = 20\nmethods = dac\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let summary = dir.path().join("summary.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_fullrank"))
        .args(["bench", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv)
        .args([
            "--set",
            "replications=3",
            "--set",
            "methods=dac,spectral",
            "--summary",
        ])
        .arg(&summary)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("method,beta,L,L1,n,p,seed,kendall"));
    assert_eq!(text.lines().count(), 1 + 6);
    assert_eq!(
        std::fs::read_to_string(&summary).unwrap().lines().count(),
        1 + 2
    );

    let out = fullrank(&["summarize", "--records", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().lines().count(),
        1 + 2
    );
}

#[test]
fn bad_inputs_exit_with_code_two() {
    assert_eq!(
        fullrank(&["losses", "--estimate", "1,1", "--truth", "1,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        fullrank(&["rank", "--data", "/nonexistent.json"])
            .status
            .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n = 20\nbogus = 1\n").unwrap();
    let out = fullrank(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}
