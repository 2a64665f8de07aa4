//! `fullrank` command-line tool.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use fullrank::experiment::{
    read_records_file, run_experiment, summarize, write_records_csv, write_records_file,
    write_summary_csv, ExperimentConfig,
};
use fullrank::gaussian::logit_least_squares_rank;
use fullrank::mle::{fit_global_mle, rank_from_scores, FitOptions};
use fullrank::pipeline::HSelection;
use fullrank::rates::{minimax_rate_btl, minimax_rate_gaussian, oracle_fisher, variance_function};
use fullrank::spectral::spectral_rank;
use fullrank::{
    default_l1, divide_and_conquer_rank, footrule, hamming_topk, kendall_tau, make_regular_skills,
    sample_comparison_data, ComparisonDataset, DacOptions, RankVector,
};

const THREADS_ENV: &str = "FULLRANK_THREADS";

#[derive(Parser)]
#[command(
    name = "fullrank",
    version,
    about = "Full ranking from pairwise comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a comparison dataset with regular skills and identity truth.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long = "L")]
        games: u32,
        /// Preliminary games; defaults to ceil(sqrt(L ln n)).
        #[arg(long = "L1")]
        prelim: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the players of a dataset file.
    Rank {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = RankMethod::Dac)]
        method: RankMethod,
        #[arg(long = "M", default_value_t = 5.0)]
        m: f64,
        /// `practical`, `data_driven`, `oracle:<beta>` or a number.
        #[arg(long, default_value = "practical")]
        h: String,
        /// Report losses against a comma-separated true rank vector.
        #[arg(long, value_delimiter = ',')]
        truth: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid from a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; overrides `output_path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; falls back to FULLRANK_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        /// Config override `key=value`, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Write the per-cell summary CSV here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Summarize an existing records CSV.
    Summarize {
        #[arg(long)]
        records: PathBuf,
    },
    /// Order-level minimax rates for regular skills.
    Rates {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long = "L")]
        games: f64,
        /// Also report the Gaussian rate with this noise variance.
        #[arg(long)]
        sigma2: Option<f64>,
    },
    /// Distances between two rank vectors.
    Losses {
        #[arg(long, value_delimiter = ',')]
        estimate: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        truth: Vec<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RankMethod {
    Dac,
    Mle,
    Spectral,
    GaussianLs,
}

fn parse_h(s: &str) -> Result<HSelection> {
    Ok(match s {
        "practical" => HSelection::Practical,
        "data_driven" => HSelection::DataDriven,
        _ => match s.strip_prefix("oracle:") {
            Some(beta) => HSelection::Oracle {
                beta: beta.parse().with_context(|| format!("bad beta in `{s}`"))?,
            },
            None => HSelection::Fixed(s.parse().with_context(|| format!("bad h `{s}`"))?),
        },
    })
}

fn emit(value: &serde_json::Value, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.parse()
                    .with_context(|| format!("bad {THREADS_ENV} value `{v}`"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            bail!("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()?;
    }
    Ok(())
}

fn simulate(
    n: usize,
    p: f64,
    beta: f64,
    games: u32,
    prelim: Option<u32>,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let prelim = prelim.unwrap_or_else(|| default_l1(games, n));
    let skills = make_regular_skills(n, beta)?;
    let data = sample_comparison_data(&skills, &RankVector::identity(n), p, games, prelim, seed)?;
    match out {
        Some(path) => data.write_json(&path)?,
        None => println!("{}", data.to_json()?),
    }
    Ok(())
}

fn rank(
    data: PathBuf,
    method: RankMethod,
    m: f64,
    h: &str,
    truth: Option<Vec<usize>>,
    out: Option<PathBuf>,
) -> Result<()> {
    let dataset = ComparisonDataset::read_json(&data)
        .with_context(|| format!("reading {}", data.display()))?;
    let truth = truth.map(RankVector::new).transpose()?;
    let (name, rank, extra) = match method {
        RankMethod::Dac => {
            let opts = DacOptions {
                m,
                h: parse_h(h)?,
                ..Default::default()
            };
            let res = divide_and_conquer_rank(&dataset, &opts)?;
            let extra = json!({
                "leagues": res.partition.leagues(),
                "diagnostics": res.diagnostics,
            });
            ("dac", res.rank, extra)
        }
        RankMethod::Mle => {
            let fit = fit_global_mle(&dataset, &FitOptions::default());
            let extra = json!({ "converged": fit.converged, "iterations": fit.iterations, "theta": fit.theta });
            ("global_mle", rank_from_scores(&fit.theta)?, extra)
        }
        RankMethod::Spectral => {
            let res = spectral_rank(&dataset)?;
            let extra = json!({
                "converged": res.stationary.converged,
                "reducible": res.stationary.reducible,
                "pi": res.stationary.pi,
            });
            ("spectral", res.rank, extra)
        }
        RankMethod::GaussianLs => {
            let (rank, fit) = logit_least_squares_rank(&dataset)?;
            (
                "gaussian_ls",
                rank,
                json!({ "theta": fit.theta, "components": fit.n_components }),
            )
        }
    };
    let mut report = json!({ "method": name, "rank": rank.as_slice(), "details": extra });
    if let Some(truth) = truth {
        report["kendall"] = json!(kendall_tau(&rank, &truth)?);
        report["footrule"] = json!(footrule(&rank, &truth)?);
    }
    emit(&report, out.as_ref())
}

fn bench(
    config: PathBuf,
    out: Option<PathBuf>,
    threads: Option<usize>,
    overrides: Vec<String>,
    summary: Option<PathBuf>,
) -> Result<()> {
    configure_threads(threads)?;
    let mut cfg = ExperimentConfig::from_file(&config)
        .with_context(|| format!("reading {}", config.display()))?;
    for item in &overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("override `{item}` is not `key=value`"))?;
        cfg.set(key.trim(), value.trim())?;
    }
    log::info!("running {} records", cfg.record_count());
    let records = run_experiment(&cfg)?;
    match out.or(cfg.output_path.clone()) {
        Some(path) => write_records_file(&records, &path)?,
        None => write_records_csv(&records, std::io::stdout().lock())?,
    }
    let rows = summarize(&records);
    match summary {
        Some(path) => write_summary_csv(&rows, std::fs::File::create(&path)?)?,
        None => {
            let mut err = std::io::stderr().lock();
            write_summary_csv(&rows, &mut err)?;
            err.flush()?;
        }
    }
    Ok(())
}

fn rates(n: usize, p: f64, beta: f64, games: f64, sigma2: Option<f64>) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) || !(games > 0.0) {
        bail!("need p in (0, 1] and L > 0");
    }
    let skills = make_regular_skills(n, beta)?;
    let v: Vec<f64> = (0..n).map(|i| variance_function(&skills, i)).collect();
    let mut report = json!({
        "btl": minimax_rate_btl(&skills, p, games, beta),
        "variance_function": {
            "min": v.iter().copied().fold(f64::INFINITY, f64::min),
            "max": v.iter().copied().fold(0.0, f64::max),
        },
        "oracle_fisher_median_player": oracle_fisher(&skills, n / 2, games, p),
    });
    if let Some(s2) = sigma2 {
        if !(s2 > 0.0) {
            bail!("sigma2 must be positive");
        }
        report["gaussian"] = json!(minimax_rate_gaussian(&skills, p, s2, beta));
    }
    emit(&report, None)
}

fn losses(estimate: Vec<usize>, truth: Vec<usize>, k: Option<usize>) -> Result<()> {
    let est = RankVector::new(estimate)?;
    let truth = RankVector::new(truth)?;
    let mut report = json!({
        "kendall": kendall_tau(&est, &truth)?,
        "footrule": footrule(&est, &truth)?,
    });
    if let Some(k) = k {
        report["hamming_topk"] = json!(hamming_topk(&est, &truth, k)?);
    }
    emit(&report, None)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            n,
            p,
            beta,
            games,
            prelim,
            seed,
            out,
        } => simulate(n, p, beta, games, prelim, seed, out),
        Command::Rank {
            data,
            method,
            m,
            h,
            truth,
            out,
        } => rank(data, method, m, &h, truth, out),
        Command::Bench {
            config,
            out,
            threads,
            overrides,
            summary,
        } => bench(config, out, threads, overrides, summary),
        Command::Summarize { records } => {
            let rows = summarize(&read_records_file(&records)?);
            write_summary_csv(&rows, std::io::stdout().lock())?;
            Ok(())
        }
        Command::Rates {
            n,
            p,
            beta,
            games,
            sigma2,
        } => rates(n, p, beta, games, sigma2),
        Command::Losses { estimate, truth, k } => losses(estimate, truth, k),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
