//! Seeded simulation grids over `(beta, L, method)` with CSV output.
//!
//! # Config grammar
//!
//! One `key = value` per line. Blank lines and lines starting with `#` are
//! ignored, as is anything after a `#` on a line. Lists are comma separated.
//!
//! | key            | value                                                   | default      |
//! |----------------|---------------------------------------------------------|--------------|
//! | `n`            | number of players                                       | required     |
//! | `p`            | edge probability in `(0, 1]`                             | required     |
//! | `beta_grid`    | list of positive `beta`                                 | required     |
//! | `lpairs`       | list of `L:L1`, or bare `L` for the default `L1`        | required     |
//! | `methods`      | subset of `dac, global_mle, spectral, gaussian_ls`      | all four     |
//! | `replications` | positive integer                                        | `1`          |
//! | `base_seed`    | unsigned integer                                        | `0`          |
//! | `M`            | positive real                                           | `5`          |
//! | `h_mode`       | `practical`, `data_driven`, `oracle` or `fixed:<h>`     | `practical`  |
//! | `output_path`  | CSV destination                                         | none         |
//! | `timing`       | `true` to fill `runtime_ms`                             | `false`      |
//! | `max_iter`     | iteration cap for likelihood fits                       | `10000`      |
//! | `tol`          | fit tolerance                                           | `1e-8`       |
//!
//! With `timing = false` the CSV is a pure function of the config.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::logit_least_squares_rank;
use crate::losses::{footrule, kendall_tau};
use crate::mle::{fit_global_mle, rank_from_scores, FitOptions};
use crate::model::{
    default_l1, make_regular_skills, sample_comparison_data, ComparisonDataset, Fnv64, RankVector,
};
use crate::partition::partition_error_metric;
use crate::pipeline::{divide_and_conquer_rank, DacOptions, HSelection};
use crate::spectral::spectral_rank;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dac,
    GlobalMle,
    Spectral,
    GaussianLs,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Dac,
        Method::GlobalMle,
        Method::Spectral,
        Method::GaussianLs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dac => "dac",
            Method::GlobalMle => "global_mle",
            Method::Spectral => "spectral",
            Method::GaussianLs => "gaussian_ls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dac" => Ok(Method::Dac),
            "global_mle" | "mle" => Ok(Method::GlobalMle),
            "spectral" => Ok(Method::Spectral),
            "gaussian_ls" => Ok(Method::GaussianLs),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Threshold rule; `Oracle` uses the `beta` of each grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HMode {
    Practical,
    DataDriven,
    Oracle,
    Fixed(f64),
}

impl FromStr for HMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "practical" => Ok(HMode::Practical),
            "data_driven" => Ok(HMode::DataDriven),
            "oracle" => Ok(HMode::Oracle),
            _ => {
                let value = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| invalid(format!("unknown h_mode `{s}`")))?;
                let h: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad fixed h `{value}`")))?;
                if !(h >= 0.0 && h.is_finite()) {
                    return Err(invalid(format!("fixed h must be non-negative, got {h}")));
                }
                Ok(HMode::Fixed(h))
            }
        }
    }
}

impl HMode {
    fn selection(self, beta: f64) -> HSelection {
        match self {
            HMode::Practical => HSelection::Practical,
            HMode::DataDriven => HSelection::DataDriven,
            HMode::Oracle => HSelection::Oracle { beta },
            HMode::Fixed(h) => HSelection::Fixed(h),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: f64,
    pub beta_grid: Vec<f64>,
    /// `(L, L1)` pairs.
    pub lpairs: Vec<(u32, u32)>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub base_seed: u64,
    pub m: f64,
    pub h_mode: HMode,
    pub output_path: Option<PathBuf>,
    pub timing: bool,
    pub fit: FitOptions,
}

impl ExperimentConfig {
    /// Parses the flat `key = value` format described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                reason: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim().to_string();
            if raw
                .insert(key.clone(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config {
                    line: line_no,
                    reason: format!("duplicate key `{key}`"),
                });
            }
        }
        let mut partial = PartialConfig::default();
        for (key, (line, value)) in &raw {
            partial.set(key, value).map_err(|e| Error::Config {
                line: *line,
                reason: e.to_string(),
            })?;
        }
        partial.finish()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies a single `key = value` override, then revalidates.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut partial = PartialConfig::from(self.clone());
        partial.set(key, value)?;
        *self = partial.finish()?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid(format!("p must lie in (0, 1], got {}", self.p)));
        }
        if self.beta_grid.is_empty() || self.beta_grid.iter().any(|b| !(*b > 0.0 && b.is_finite()))
        {
            return Err(invalid(
                "beta_grid must be a nonempty list of positive values",
            ));
        }
        if self.lpairs.is_empty() {
            return Err(invalid("lpairs must be nonempty"));
        }
        if let Some((l, l1)) = self.lpairs.iter().find(|(l, l1)| !(1 <= *l1 && l1 < l)) {
            return Err(invalid(format!("need 1 <= L1 < L, got {l}:{l1}")));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods must be nonempty"));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(invalid(format!("M must be positive, got {}", self.m)));
        }
        if self.fit.max_iter == 0 || !(self.fit.tol > 0.0) {
            return Err(invalid("max_iter and tol must be positive"));
        }
        Ok(())
    }

    /// Number of records a run produces.
    pub fn record_count(&self) -> usize {
        self.beta_grid.len() * self.lpairs.len() * self.methods.len() * self.replications
    }
}

#[derive(Default)]
struct PartialConfig {
    n: Option<usize>,
    p: Option<f64>,
    beta_grid: Option<Vec<f64>>,
    lpairs: Option<Vec<(u32, Option<u32>)>>,
    methods: Option<Vec<Method>>,
    replications: Option<usize>,
    base_seed: Option<u64>,
    m: Option<f64>,
    h_mode: Option<HMode>,
    output_path: Option<PathBuf>,
    timing: Option<bool>,
    max_iter: Option<usize>,
    tol: Option<f64>,
}

impl From<ExperimentConfig> for PartialConfig {
    fn from(c: ExperimentConfig) -> Self {
        Self {
            n: Some(c.n),
            p: Some(c.p),
            beta_grid: Some(c.beta_grid),
            lpairs: Some(c.lpairs.into_iter().map(|(l, l1)| (l, Some(l1))).collect()),
            methods: Some(c.methods),
            replications: Some(c.replications),
            base_seed: Some(c.base_seed),
            m: Some(c.m),
            h_mode: Some(c.h_mode),
            output_path: c.output_path,
            timing: Some(c.timing),
            max_iter: Some(c.fit.max_iter),
            tol: Some(c.fit.tol),
        }
    }
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("bad value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(key, s))
        .collect()
}

impl PartialConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = Some(parse_scalar(key, value)?),
            "p" => self.p = Some(parse_scalar(key, value)?),
            "beta_grid" | "beta" => self.beta_grid = Some(parse_list(key, value)?),
            "lpairs" => {
                let pairs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|item| match item.split_once(':') {
                        Some((l, l1)) => Ok((parse_scalar(key, l)?, Some(parse_scalar(key, l1)?))),
                        None => Ok((parse_scalar(key, item)?, None)),
                    })
                    .collect::<Result<_>>()?;
                self.lpairs = Some(pairs);
            }
            "methods" => {
                let mut methods: Vec<Method> = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
                methods.sort();
                methods.dedup();
                self.methods = Some(methods);
            }
            "replications" => self.replications = Some(parse_scalar(key, value)?),
            "base_seed" => self.base_seed = Some(parse_scalar(key, value)?),
            "M" | "m" => self.m = Some(parse_scalar(key, value)?),
            "h_mode" => self.h_mode = Some(value.parse()?),
            "output_path" => self.output_path = Some(PathBuf::from(value.trim())),
            "timing" => self.timing = Some(parse_scalar(key, value)?),
            "max_iter" => self.max_iter = Some(parse_scalar(key, value)?),
            "tol" => self.tol = Some(parse_scalar(key, value)?),
            other => return Err(invalid(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    fn finish(self) -> Result<ExperimentConfig> {
        let n = self.n.ok_or_else(|| invalid("missing key `n`"))?;
        let lpairs = self
            .lpairs
            .ok_or_else(|| invalid("missing key `lpairs`"))?
            .into_iter()
            .map(|(l, l1)| (l, l1.unwrap_or_else(|| default_l1(l, n))))
            .collect();
        let defaults = FitOptions::default();
        let config = ExperimentConfig {
            n,
            p: self.p.ok_or_else(|| invalid("missing key `p`"))?,
            beta_grid: self
                .beta_grid
                .ok_or_else(|| invalid("missing key `beta_grid`"))?,
            lpairs,
            methods: self.methods.unwrap_or_else(|| Method::ALL.to_vec()),
            replications: self.replications.unwrap_or(1),
            base_seed: self.base_seed.unwrap_or(0),
            m: self.m.unwrap_or(5.0),
            h_mode: self.h_mode.unwrap_or(HMode::Practical),
            output_path: self.output_path,
            timing: self.timing.unwrap_or(false),
            fit: FitOptions {
                max_iter: self.max_iter.unwrap_or(defaults.max_iter),
                tol: self.tol.unwrap_or(defaults.tol),
                solver: defaults.solver,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

/// FNV-1a over `(base_seed, beta index, L index, replication)`.
pub fn derive_seed(base_seed: u64, beta_idx: usize, l_idx: usize, rep: usize) -> u64 {
    let mut h = Fnv64::new();
    for v in [base_seed, beta_idx as u64, l_idx as u64, rep as u64] {
        h.write_u64(v);
    }
    h.finish()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub beta: f64,
    #[serde(rename = "L")]
    pub games: u32,
    #[serde(rename = "L1")]
    pub prelim_games: u32,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub kendall: Option<f64>,
    pub footrule: Option<f64>,
    pub runtime_ms: Option<f64>,
    #[serde(rename = "K_leagues")]
    pub k_leagues: Option<usize>,
    #[serde(rename = "E_partition")]
    pub e_partition: Option<f64>,
    pub converged_all: Option<bool>,
    pub warnings: String,
    /// Content hash of the dataset the method ran on. Not written to CSV.
    #[serde(skip)]
    pub dataset_hash: Option<u64>,
}

pub const CSV_HEADER: [&str; 14] = [
    "method",
    "beta",
    "L",
    "L1",
    "n",
    "p",
    "seed",
    "kendall",
    "footrule",
    "runtime_ms",
    "K_leagues",
    "E_partition",
    "converged_all",
    "warnings",
];

struct Outcome {
    rank: Result<RankVector>,
    k_leagues: Option<usize>,
    e_partition: Option<f64>,
    converged: Option<bool>,
    warnings: Vec<String>,
}

fn run_method(
    method: Method,
    data: &ComparisonDataset,
    truth: &RankVector,
    dac: &DacOptions,
    fit: &FitOptions,
) -> Outcome {
    let mut out = Outcome {
        rank: Err(invalid("not run")),
        k_leagues: None,
        e_partition: None,
        converged: None,
        warnings: Vec::new(),
    };
    match method {
        Method::Dac => match divide_and_conquer_rank(data, dac) {
            Ok(res) => {
                out.k_leagues = Some(res.diagnostics.k_leagues);
                out.e_partition = Some(partition_error_metric(&res.partition, truth));
                out.converged = Some(res.diagnostics.converged_all);
                out.warnings = res.diagnostics.warnings;
                out.rank = Ok(res.rank);
            }
            Err(e) => out.rank = Err(e),
        },
        Method::GlobalMle => {
            let fit = fit_global_mle(data, fit);
            out.converged = Some(fit.converged);
            if !fit.is_connected() {
                out.warnings.push(format!(
                    "comparison graph has {} components",
                    fit.n_components
                ));
            }
            out.rank = rank_from_scores(&fit.theta);
        }
        Method::Spectral => match spectral_rank(data) {
            Ok(res) => {
                out.converged = Some(res.stationary.converged);
                if res.stationary.reducible {
                    out.warnings
                        .push("transition matrix is reducible".to_string());
                }
                out.rank = Ok(res.rank);
            }
            Err(e) => out.rank = Err(e),
        },
        Method::GaussianLs => match logit_least_squares_rank(data) {
            Ok((rank, fit)) => {
                out.converged = Some(true);
                if fit.n_components > 1 {
                    out.warnings.push(format!(
                        "comparison graph has {} components",
                        fit.n_components
                    ));
                }
                out.rank = Ok(rank);
            }
            Err(e) => out.rank = Err(e),
        },
    }
    out
}

/// Runs every grid point and replication; all methods at a point share one
/// dataset. Records come back sorted by `(beta, L, replication, method)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let truth = RankVector::identity(config.n);
    let tasks: Vec<(usize, usize, usize)> = (0..config.beta_grid.len())
        .flat_map(|b| {
            (0..config.lpairs.len())
                .flat_map(move |l| (0..config.replications).map(move |r| (b, l, r)))
        })
        .collect();

    let mut records: Vec<((usize, usize, usize), RunRecord)> = tasks
        .par_iter()
        .flat_map_iter(|&(b, l, rep)| {
            let beta = config.beta_grid[b];
            let (games, prelim) = config.lpairs[l];
            let seed = derive_seed(config.base_seed, b, l, rep);
            let dataset = make_regular_skills(config.n, beta).and_then(|skills| {
                sample_comparison_data(&skills, &truth, config.p, games, prelim, seed)
            });
            let dac = DacOptions {
                m: config.m,
                h: config.h_mode.selection(beta),
                fit: config.fit,
            };
            let base = RunRecord {
                method: Method::Dac,
                beta,
                games,
                prelim_games: prelim,
                n: config.n,
                p: config.p,
                seed,
                kendall: None,
                footrule: None,
                runtime_ms: None,
                k_leagues: None,
                e_partition: None,
                converged_all: None,
                warnings: String::new(),
                dataset_hash: None,
            };
            let truth = &truth;
            let per_method: Vec<_> = config
                .methods
                .iter()
                .map(|&method| {
                    let mut rec = RunRecord {
                        method,
                        ..base.clone()
                    };
                    match &dataset {
                        Err(e) => rec.warnings = format!("data generation failed: {e}"),
                        Ok(data) => {
                            rec.dataset_hash = Some(data.content_hash());
                            let start = Instant::now();
                            let out = run_method(method, data, truth, &dac, &config.fit);
                            let elapsed = start.elapsed().as_secs_f64() * 1e3;
                            if config.timing {
                                rec.runtime_ms = Some(elapsed);
                            }
                            rec.k_leagues = out.k_leagues;
                            rec.e_partition = out.e_partition;
                            rec.converged_all = out.converged;
                            let mut warnings = out.warnings;
                            match out.rank {
                                Ok(rank) => {
                                    rec.kendall = kendall_tau(&rank, truth).ok();
                                    rec.footrule = footrule(&rank, truth).ok();
                                }
                                Err(e) => warnings.push(format!("method failed: {e}")),
                            }
                            rec.warnings = warnings.join("; ");
                        }
                    }
                    ((b, l, rep), rec)
                })
                .collect();
            per_method
        })
        .collect();
    records.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.method.cmp(&b.1.method)));
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Writes records under [`CSV_HEADER`]; floats use the shortest
/// representation that parses back to the same value.
pub fn write_records_csv<W: Write>(records: &[RunRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.method.name().to_string(),
            r.beta.to_string(),
            r.games.to_string(),
            r.prelim_games.to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.seed.to_string(),
            opt(&r.kendall),
            opt(&r.footrule),
            opt(&r.runtime_ms),
            opt(&r.k_leagues),
            opt(&r.e_partition),
            opt(&r.converged_all),
            r.warnings.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_file(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_records_csv(records, std::io::BufWriter::new(file))
}

fn parse_opt<T: FromStr>(field: &str, column: &str) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::MalformedDataset(format!("bad `{column}` value `{field}`")))
}

fn parse_req<T: FromStr>(field: &str, column: &str) -> Result<T> {
    parse_opt(field, column)?.ok_or_else(|| Error::MalformedDataset(format!("missing `{column}`")))
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::MalformedDataset(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let f = |k: usize| row.get(k).unwrap_or("");
        out.push(RunRecord {
            method: f(0).parse()?,
            beta: parse_req(f(1), "beta")?,
            games: parse_req(f(2), "L")?,
            prelim_games: parse_req(f(3), "L1")?,
            n: parse_req(f(4), "n")?,
            p: parse_req(f(5), "p")?,
            seed: parse_req(f(6), "seed")?,
            kendall: parse_opt(f(7), "kendall")?,
            footrule: parse_opt(f(8), "footrule")?,
            runtime_ms: parse_opt(f(9), "runtime_ms")?,
            k_leagues: parse_opt(f(10), "K_leagues")?,
            e_partition: parse_opt(f(11), "E_partition")?,
            converged_all: parse_opt(f(12), "converged_all")?,
            warnings: f(13).to_string(),
            dataset_hash: None,
        });
    }
    Ok(out)
}

pub fn read_records_file(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    read_records_csv(std::fs::File::open(path)?)
}

/// Aggregate over one `(method, beta, L)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub beta: f64,
    #[serde(rename = "L")]
    pub games: u32,
    pub runs: usize,
    /// Runs without a loss value.
    pub failures: usize,
    pub kendall_mean: Option<f64>,
    pub kendall_sd: Option<f64>,
    pub footrule_mean: Option<f64>,
    pub runtime_mean: Option<f64>,
    pub k_leagues_mean: Option<f64>,
    pub e_partition_max: Option<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample standard deviation; zero for a single value.
fn stddev(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

/// Groups by `(method, beta, L)` in ascending order.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Method, u64, u32), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.method, r.beta.to_bits(), r.games))
            .or_default()
            .push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_values()
        .map(|group| {
            let collect = |f: &dyn Fn(&RunRecord) -> Option<f64>| -> Vec<f64> {
                group.iter().filter_map(|r| f(r)).collect()
            };
            let kendall = collect(&|r| r.kendall);
            let e_partition = collect(&|r| r.e_partition);
            SummaryRow {
                method: group[0].method,
                beta: group[0].beta,
                games: group[0].games,
                runs: group.len(),
                failures: group.len() - kendall.len(),
                kendall_mean: mean(&kendall),
                kendall_sd: stddev(&kendall),
                footrule_mean: mean(&collect(&|r| r.footrule)),
                runtime_mean: mean(&collect(&|r| r.runtime_ms)),
                k_leagues_mean: mean(&collect(&|r| r.k_leagues.map(|k| k as f64))),
                e_partition_max: e_partition.into_iter().reduce(f64::max),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.beta.total_cmp(&b.beta))
            .then(a.games.cmp(&b.games))
    });
    rows
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "method",
        "beta",
        "L",
        "runs",
        "failures",
        "kendall_mean",
        "kendall_sd",
        "footrule_mean",
        "runtime_mean_ms",
        "K_leagues_mean",
        "E_partition_max",
    ])?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.beta.to_string(),
            r.games.to_string(),
            r.runs.to_string(),
            r.failures.to_string(),
            opt(&r.kendall_mean),
            opt(&r.kendall_sd),
            opt(&r.footrule_mean),
            opt(&r.runtime_mean),
            opt(&r.k_leagues_mean),
            opt(&r.e_partition_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}
