//! BTL model primitives, domain types and seeded synthetic data.
//!
//! Players are indexed `0..n`. Skills are stored by *true rank position*:
//! `theta[k]` is the skill of the player whose true rank is `k + 1`, and a
//! [`RankVector`] maps each player to its rank. Comparison data only ever
//! sees skills through the rank vector, so the rank vector is the estimand.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Logistic function `1 / (1 + e^-t)`, evaluated without overflow.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Derivative of the logistic function, `e^t / (1 + e^t)^2`.
///
/// Evaluated through `e^-|t|` so the tails keep full relative precision.
pub fn sigmoid_derivative(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Inverse of [`sigmoid`]. Returns `±inf` at the endpoints 0 and 1.
pub fn logit(prob: f64) -> f64 {
    (prob / (1.0 - prob)).ln()
}

/// `ln sigmoid(t)`, stable for large `|t|`.
pub(crate) fn log_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        -(-t).exp().ln_1p()
    } else {
        t - t.exp().ln_1p()
    }
}

/// A permutation of `1..=n`; entry `i` is the rank of player `i` (1 = strongest).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RankVector(Vec<usize>);

impl RankVector {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        check_permutation(&ranks)?;
        Ok(Self(ranks))
    }

    /// Player `i` has rank `i + 1`.
    pub fn identity(n: usize) -> Self {
        Self((1..=n).collect())
    }

    /// Builds the rank vector from an ordering of players, strongest first.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let n = order.len();
        let mut ranks = vec![0usize; n];
        for (pos, &player) in order.iter().enumerate() {
            if player >= n || ranks[player] != 0 {
                return Err(Error::NotAPermutation {
                    n,
                    reason: format!("player {player} missing or repeated in ordering"),
                });
            }
            ranks[player] = pos + 1;
        }
        Ok(Self(ranks))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Rank of player `i`.
    pub fn rank_of(&self, i: usize) -> usize {
        self.0[i]
    }

    /// Players ordered from strongest to weakest.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0usize; self.0.len()];
        for (player, &r) in self.0.iter().enumerate() {
            order[r - 1] = player;
        }
        order
    }
}

impl TryFrom<Vec<usize>> for RankVector {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RankVector> for Vec<usize> {
    fn from(r: RankVector) -> Self {
        r.0
    }
}

pub(crate) fn check_permutation(ranks: &[usize]) -> Result<()> {
    let n = ranks.len();
    let mut seen = vec![false; n];
    for &r in ranks {
        if r == 0 || r > n {
            return Err(Error::NotAPermutation {
                n,
                reason: format!("value {r} out of range"),
            });
        }
        if std::mem::replace(&mut seen[r - 1], true) {
            return Err(Error::NotAPermutation {
                n,
                reason: format!("value {r} repeated"),
            });
        }
    }
    Ok(())
}

/// Sorted latent skills together with their regularity parameters.
///
/// Invariant: `theta` is strictly decreasing and every pair satisfies
/// `1 <= |theta[i] - theta[j]| / (beta |i - j|) <= c0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillVector {
    theta: Vec<f64>,
    beta: f64,
    c0: f64,
}

impl SkillVector {
    pub fn new(theta: Vec<f64>, beta: f64, c0: f64) -> Result<Self> {
        if theta.len() < 2 {
            return Err(invalid("skill vector needs at least two players"));
        }
        if !validate_parameter_space(&theta, beta, c0) {
            return Err(invalid(format!(
                "skills are not in the regular parameter space (beta={beta}, c0={c0})"
            )));
        }
        Ok(Self { theta, beta, c0 })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Evenly spaced skills `theta[i] = -beta (i + 1)`.
pub fn make_regular_skills(n: usize, beta: f64) -> Result<SkillVector> {
    if n < 2 {
        return Err(invalid(format!("need n >= 2, got {n}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("need beta > 0, got {beta}")));
    }
    let theta = (0..n).map(|i| -beta * (i + 1) as f64).collect();
    Ok(SkillVector {
        theta,
        beta,
        c0: 1.0,
    })
}

// Relative slack on the ratio bounds: skills built as `-beta * i` do not give
// gaps of exactly `beta` in floating point.
const RATIO_SLACK: f64 = 1e-9;
const EXHAUSTIVE_LIMIT: usize = 10_000;
const SAMPLED_PAIRS: usize = 1_000_000;

/// Membership test for the regular parameter space with constants `(beta, c0)`.
///
/// All pairs are checked for `n <= 10_000`. Above that, the check covers
/// adjacent pairs, every pair involving the first or last player, and one
/// million pairs drawn from a fixed-seed generator. Ratio bounds are
/// compared with a relative slack of `1e-9`.
pub fn validate_parameter_space(theta: &[f64], beta: f64, c0: f64) -> bool {
    let n = theta.len();
    if n < 2 || !(beta > 0.0) || !(c0 >= 1.0) || theta.iter().any(|t| !t.is_finite()) {
        return false;
    }
    if theta.windows(2).any(|w| w[0] <= w[1]) {
        return false;
    }
    let pair_ok = |i: usize, j: usize| {
        let ratio = (theta[i] - theta[j]).abs() / (beta * i.abs_diff(j) as f64);
        ratio >= 1.0 - RATIO_SLACK && ratio <= c0 * (1.0 + RATIO_SLACK)
    };
    if n <= EXHAUSTIVE_LIMIT {
        return (0..n).all(|i| (i + 1..n).all(|j| pair_ok(i, j)));
    }
    if !(0..n - 1).all(|i| pair_ok(i, i + 1)) {
        return false;
    }
    if !(1..n).all(|j| pair_ok(0, j)) || !(0..n - 1).all(|i| pair_ok(i, n - 1)) {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_5ace);
    (0..SAMPLED_PAIRS).all(|_| {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        i == j || pair_ok(i, j)
    })
}

/// `ceil(sqrt(L ln n))`, clamped to `[1, L - 1]`.
pub fn default_l1(games: u32, n: usize) -> u32 {
    let raw = ((games as f64) * (n as f64).ln()).sqrt().ceil();
    let upper = games.saturating_sub(1).max(1);
    (raw.max(1.0) as u32).clamp(1, upper)
}

/// Summary of the games played on one edge `(i, j)` with `i < j`.
///
/// `ybar1` is the fraction of the preliminary games won by `i`, `ybar2` the
/// fraction of the remaining games won by `i`. Values from `j`'s side are
/// the complements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub i: usize,
    pub j: usize,
    pub ybar1: f64,
    pub ybar2: f64,
}

impl EdgeSummary {
    /// Preliminary win rate of `player` (one of the endpoints) against the other.
    #[inline]
    pub fn ybar1_for(&self, player: usize) -> f64 {
        if player == self.i {
            self.ybar1
        } else {
            1.0 - self.ybar1
        }
    }

    #[inline]
    pub fn ybar2_for(&self, player: usize) -> f64 {
        if player == self.i {
            self.ybar2
        } else {
            1.0 - self.ybar2
        }
    }

    #[inline]
    pub fn other(&self, player: usize) -> usize {
        if player == self.i {
            self.j
        } else {
            self.i
        }
    }
}

/// Random comparison graph plus per-edge split win rates.
///
/// Individual game outcomes are not retained. Edges are stored once, keyed
/// by `(i, j)` with `i < j`, sorted; per-player neighbor lists point into
/// the edge list.
#[derive(Clone, Debug)]
pub struct ComparisonDataset {
    n: usize,
    p: f64,
    games: u32,
    prelim_games: u32,
    seed: u64,
    edges: Vec<EdgeSummary>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for ComparisonDataset {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.p.to_bits() == other.p.to_bits()
            && self.games == other.games
            && self.prelim_games == other.prelim_games
            && self.seed == other.seed
            && self.edges == other.edges
    }
}

impl ComparisonDataset {
    /// Assembles a dataset from explicit edge summaries.
    ///
    /// Edges may be given in either orientation; an edge `(j, i)` with
    /// `j > i` is flipped and its win rates complemented. Sampled datasets
    /// have win rates on the grids `k / L1` and `k / (L - L1)`; hand-built
    /// ones only need values in `[0, 1]`.
    pub fn from_edges(
        n: usize,
        p: f64,
        games: u32,
        prelim_games: u32,
        seed: u64,
        edges: Vec<EdgeSummary>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::MalformedDataset("n must be positive".into()));
        }
        check_sampling_params(p, games, prelim_games)
            .map_err(|e| Error::MalformedDataset(e.to_string()))?;
        let mut normalized = Vec::with_capacity(edges.len());
        for e in edges {
            if e.i >= n || e.j >= n || e.i == e.j {
                return Err(Error::MalformedDataset(format!(
                    "edge ({}, {}) invalid for n = {n}",
                    e.i, e.j
                )));
            }
            for y in [e.ybar1, e.ybar2] {
                if !(0.0..=1.0).contains(&y) {
                    return Err(Error::MalformedDataset(format!(
                        "win rate {y} on edge ({}, {}) outside [0, 1]",
                        e.i, e.j
                    )));
                }
            }
            normalized.push(if e.i < e.j {
                e
            } else {
                EdgeSummary {
                    i: e.j,
                    j: e.i,
                    ybar1: 1.0 - e.ybar1,
                    ybar2: 1.0 - e.ybar2,
                }
            });
        }
        normalized.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = normalized
            .windows(2)
            .find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j))
        {
            return Err(Error::MalformedDataset(format!(
                "duplicate edge ({}, {})",
                w[0].i, w[0].j
            )));
        }
        Ok(Self::assemble(n, p, games, prelim_games, seed, normalized))
    }

    fn assemble(
        n: usize,
        p: f64,
        games: u32,
        prelim_games: u32,
        seed: u64,
        edges: Vec<EdgeSummary>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            adjacency[e.i].push((e.j, idx));
            adjacency[e.j].push((e.i, idx));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            n,
            p,
            games,
            prelim_games,
            seed,
            edges,
            adjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Games per edge, `L`.
    pub fn games(&self) -> u32 {
        self.games
    }

    /// Preliminary games per edge, `L1`.
    pub fn prelim_games(&self) -> u32 {
        self.prelim_games
    }

    /// Games per edge used for likelihood fitting, `L - L1`.
    pub fn main_games(&self) -> u32 {
        self.games - self.prelim_games
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edges(&self) -> &[EdgeSummary] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs of player `i`, sorted by neighbor.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let list = self.adjacency.get(i)?;
        list.binary_search_by_key(&j, |&(nb, _)| nb)
            .ok()
            .map(|pos| list[pos].1)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_index(i, j).is_some()
    }

    /// Preliminary win rate of `i` over `j`, if they played.
    pub fn ybar1(&self, i: usize, j: usize) -> Option<f64> {
        self.edge_index(i, j).map(|e| self.edges[e].ybar1_for(i))
    }

    pub fn ybar2(&self, i: usize, j: usize) -> Option<f64> {
        self.edge_index(i, j).map(|e| self.edges[e].ybar2_for(i))
    }

    /// Win rate of `i` over `j` across all `L` games.
    pub fn ybar_full(&self, i: usize, j: usize) -> Option<f64> {
        self.edge_index(i, j)
            .map(|e| self.full_mean(&self.edges[e], i))
    }

    /// All-games win rate of `player` on edge `e`.
    #[inline]
    pub fn full_mean(&self, e: &EdgeSummary, player: usize) -> f64 {
        let l1 = self.prelim_games as f64;
        let l2 = self.main_games() as f64;
        let of_i = (l1 * e.ybar1 + l2 * e.ybar2) / self.games as f64;
        if player == e.i {
            of_i
        } else {
            1.0 - of_i
        }
    }

    /// Stable 64-bit FNV-1a fingerprint of the full contents.
    pub fn content_hash(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.n as u64);
        h.write_u64(self.p.to_bits());
        h.write_u64(self.games as u64);
        h.write_u64(self.prelim_games as u64);
        h.write_u64(self.seed);
        for e in &self.edges {
            h.write_u64(e.i as u64);
            h.write_u64(e.j as u64);
            h.write_u64(e.ybar1.to_bits());
            h.write_u64(e.ybar2.to_bits());
        }
        h.finish()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&DatasetFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(s)?;
        file.into_dataset()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub const DATASET_FORMAT: &str = "fullrank-comparisons";
pub const DATASET_VERSION: u32 = 1;

/// On-disk JSON layout of a [`ComparisonDataset`].
#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    format: String,
    version: u32,
    n: usize,
    p: f64,
    #[serde(rename = "L")]
    games: u32,
    #[serde(rename = "L1")]
    prelim_games: u32,
    seed: u64,
    edges: Vec<EdgeSummary>,
}

impl From<&ComparisonDataset> for DatasetFile {
    fn from(d: &ComparisonDataset) -> Self {
        Self {
            format: DATASET_FORMAT.to_string(),
            version: DATASET_VERSION,
            n: d.n,
            p: d.p,
            games: d.games,
            prelim_games: d.prelim_games,
            seed: d.seed,
            edges: d.edges.clone(),
        }
    }
}

impl DatasetFile {
    fn into_dataset(self) -> Result<ComparisonDataset> {
        if self.format != DATASET_FORMAT {
            return Err(Error::MalformedDataset(format!(
                "unknown format tag {:?}",
                self.format
            )));
        }
        if self.version != DATASET_VERSION {
            return Err(Error::MalformedDataset(format!(
                "unsupported version {}",
                self.version
            )));
        }
        ComparisonDataset::from_edges(
            self.n,
            self.p,
            self.games,
            self.prelim_games,
            self.seed,
            self.edges,
        )
    }
}

fn check_sampling_params(p: f64, games: u32, prelim_games: u32) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!(
            "edge probability must lie in (0, 1], got {p}"
        )));
    }
    if prelim_games == 0 || prelim_games >= games {
        return Err(invalid(format!(
            "need 1 <= L1 < L, got L = {games}, L1 = {prelim_games}"
        )));
    }
    Ok(())
}

const STREAM_EDGE: u64 = 0;
const STREAM_PRELIM: u64 = 1;
const STREAM_MAIN: u64 = 2;

/// Independent generator for one `(pair, purpose)` stream.
///
/// Streams are addressed by position, so the dataset does not depend on the
/// order in which pairs are visited.
pub(crate) fn pair_stream(seed: u64, n: usize, i: usize, j: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair = (i as u64) * (n as u64) + j as u64;
    rng.set_stream(pair * 3 + purpose);
    rng
}

fn count_wins(rng: &mut ChaCha8Rng, games: u32, prob: f64) -> u32 {
    (0..games).filter(|_| rng.random::<f64>() < prob).count() as u32
}

/// Draws an Erdős–Rényi comparison graph and `L` BTL games per edge.
///
/// Player `i` beats player `j` with probability
/// `sigmoid(theta[rank[i] - 1] - theta[rank[j] - 1])`. Games `1..=L1`
/// are summarized into `ybar1`, the rest into `ybar2`. The output is a pure
/// function of the arguments.
pub fn sample_comparison_data(
    skills: &SkillVector,
    rank: &RankVector,
    p: f64,
    games: u32,
    prelim_games: u32,
    seed: u64,
) -> Result<ComparisonDataset> {
    check_sampling_params(p, games, prelim_games)?;
    let n = skills.len();
    if rank.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: rank.len(),
        });
    }
    let main_games = games - prelim_games;
    let skill_of: Vec<f64> = rank
        .as_slice()
        .iter()
        .map(|&r| skills.theta()[r - 1])
        .collect();

    let edges: Vec<EdgeSummary> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let skill_of = &skill_of;
            (i + 1..n).filter_map(move |j| {
                let mut present = pair_stream(seed, n, i, j, STREAM_EDGE);
                if present.random::<f64>() >= p {
                    return None;
                }
                let prob = sigmoid(skill_of[i] - skill_of[j]);
                let w1 = count_wins(
                    &mut pair_stream(seed, n, i, j, STREAM_PRELIM),
                    prelim_games,
                    prob,
                );
                let w2 = count_wins(
                    &mut pair_stream(seed, n, i, j, STREAM_MAIN),
                    main_games,
                    prob,
                );
                Some(EdgeSummary {
                    i,
                    j,
                    ybar1: w1 as f64 / prelim_games as f64,
                    ybar2: w2 as f64 / main_games as f64,
                })
            })
        })
        .collect();

    Ok(ComparisonDataset::assemble(
        n,
        p,
        games,
        prelim_games,
        seed,
        edges,
    ))
}

/// FNV-1a, 64-bit. Used for dataset fingerprints and seed derivation; it is
/// stable across platforms and toolchain versions.
pub(crate) struct Fnv64(u64);

impl Fnv64 {
    pub(crate) fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}
