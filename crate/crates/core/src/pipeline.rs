//! Divide-and-conquer full ranking: league partition, local fits over
//! windows of neighboring leagues, pairwise relation assembly and scoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mle::{
    align_components, build_close_edges, fit_local_mle, rank_from_scores, FitOptions, LocalFit,
};
use crate::model::{ComparisonDataset, RankVector};
use crate::partition::{data_driven_h, league_partition, oracle_h, practical_h, LeaguePartition};

const UNSET: u8 = 2;

/// Binary pairwise relation matrix; `R[i][j] = 1` means `i` is judged
/// stronger than `j`. The diagonal is never set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationMatrix {
    n: usize,
    cells: Vec<u8>,
}

impl RelationMatrix {
    /// All off-diagonal entries unset.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cells: vec![UNSET; n * n],
        }
    }

    /// The relations implied by a rank vector: `R[i][j] = 1{r_i < r_j}`.
    pub fn from_rank(rank: &RankVector) -> Self {
        let n = rank.len();
        let mut r = Self::new(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    r.cells[i * n + j] = u8::from(rank.rank_of(i) < rank.rank_of(j));
                }
            }
        }
        r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<bool> {
        match self.cells[i * self.n + j] {
            UNSET => None,
            v => Some(v == 1),
        }
    }

    /// Sets `R[i][j]` and the complementary `R[j][i]`.
    pub fn set_pair(&mut self, i: usize, j: usize, i_wins: bool) {
        assert!(i != j, "diagonal of a relation matrix is undefined");
        self.cells[i * self.n + j] = u8::from(i_wins);
        self.cells[j * self.n + i] = u8::from(!i_wins);
    }

    pub fn is_set(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j] != UNSET
    }

    /// Every off-diagonal entry set with `R[i][j] + R[j][i] = 1`.
    pub fn is_complete(&self) -> bool {
        (0..self.n).all(|i| {
            (i + 1..self.n).all(|j| match (self.get(i, j), self.get(j, i)) {
                (Some(a), Some(b)) => a != b,
                _ => false,
            })
        })
    }

    /// `s_i = sum_{j != i} R[i][j]`.
    pub fn scores(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                self.cells[i * self.n..(i + 1) * self.n]
                    .iter()
                    .filter(|&&v| v == 1)
                    .count()
            })
            .collect()
    }

    /// Off-diagonal entries that differ from `other`, counted over ordered pairs.
    pub fn disagreements(&self, other: &RelationMatrix) -> usize {
        assert_eq!(self.n, other.n);
        (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.get(i, j) != other.get(i, j))
            .count()
    }
}

/// Fitted skills of one window, used to decide its pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowEstimate {
    /// Global player indices, ascending.
    pub players: Vec<usize>,
    pub theta: Vec<f64>,
    /// Players in different groups share no path of observed edges.
    pub group: Vec<usize>,
}

impl WindowEstimate {
    fn position(&self, player: usize) -> Option<usize> {
        self.players.binary_search(&player).ok()
    }
}

impl From<&LocalFit> for WindowEstimate {
    fn from(fit: &LocalFit) -> Self {
        Self {
            players: fit.players.clone(),
            theta: fit.theta.clone(),
            group: fit.component.clone(),
        }
    }
}

/// Counters from relation assembly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationStats {
    /// Pairs with exactly equal fitted skills, resolved by index.
    pub ties: usize,
    /// Pairs with no path of observed edges between them inside their window.
    pub disconnected_pairs: usize,
}

/// Fills the relations decided by local fits.
///
/// With `K >= 2` leagues, `fits[k]` is the estimate for window `k` (0-based,
/// `k < K - 1`) and sets pairs in `S_k x (S_k u S_{k+1})` that are still
/// unset; pairs inside the last league come from the last window. With one
/// league, `fits[0]` covers everybody.
pub fn within_league_relations(
    partition: &LeaguePartition,
    fits: &[WindowEstimate],
    r: &mut RelationMatrix,
) -> Result<RelationStats> {
    let leagues = partition.leagues();
    let k_total = leagues.len();
    let expected = k_total.saturating_sub(1).max(1);
    if fits.len() != expected {
        return Err(invalid(format!(
            "expected {expected} local fits for {k_total} leagues, got {}",
            fits.len()
        )));
    }
    let mut stats = RelationStats::default();
    let mut decide =
        |fit: &WindowEstimate, i: usize, j: usize, r: &mut RelationMatrix| -> Result<()> {
            if r.is_set(i, j) {
                return Ok(());
            }
            let (Some(pi), Some(pj)) = (fit.position(i), fit.position(j)) else {
                return Err(invalid(format!(
                    "pair ({i}, {j}) not covered by its local fit"
                )));
            };
            let (ti, tj) = (fit.theta[pi], fit.theta[pj]);
            if fit.group[pi] != fit.group[pj] {
                stats.disconnected_pairs += 1;
            }
            if ti == tj {
                stats.ties += 1;
                r.set_pair(i, j, i < j);
            } else {
                r.set_pair(i, j, ti > tj);
            }
            Ok(())
        };

    if k_total == 1 {
        let all = &leagues[0];
        for (a, &i) in all.iter().enumerate() {
            for &j in &all[a + 1..] {
                decide(&fits[0], i, j, r)?;
            }
        }
        return Ok(stats);
    }
    for (k, fit) in fits.iter().enumerate() {
        let own = &leagues[k];
        for (a, &i) in own.iter().enumerate() {
            for &j in own[a + 1..].iter().chain(&leagues[k + 1]) {
                decide(fit, i, j, r)?;
            }
        }
    }
    let last = &leagues[k_total - 1];
    for (a, &i) in last.iter().enumerate() {
        for &j in &last[a + 1..] {
            decide(&fits[k_total - 2], i, j, r)?;
        }
    }
    Ok(stats)
}

/// Players separated by at least one full league are ordered by league;
/// anything still unset is completed by complementarity.
pub fn cross_league_relations(partition: &LeaguePartition, r: &mut RelationMatrix) {
    let leagues = partition.leagues();
    for k in 0..leagues.len() {
        for l in k + 2..leagues.len() {
            for &i in &leagues[k] {
                for &j in &leagues[l] {
                    r.set_pair(i, j, true);
                }
            }
        }
    }
    for i in 0..r.n {
        for j in i + 1..r.n {
            match (r.get(i, j), r.get(j, i)) {
                (Some(v), None) => r.set_pair(i, j, v),
                (None, Some(v)) => r.set_pair(j, i, v),
                _ => {}
            }
        }
    }
}

/// Ranks by descending score `s_i`, ties to the lower index.
pub fn rank_from_relations(r: &RelationMatrix) -> Result<RankVector> {
    if !r.is_complete() {
        return Err(invalid(
            "relation matrix is incomplete or not complementary",
        ));
    }
    let scores: Vec<f64> = r.scores().into_iter().map(|s| s as f64).collect();
    rank_from_scores(&scores)
}

/// How the dominance threshold `h` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HSelection {
    /// `0.4 / n` times the number of close main-game edges.
    Practical,
    /// Count of edges with preliminary log-odds magnitude in `[1.2M, 1.8M]`, over `n`.
    DataDriven,
    /// `p M / beta` with the true `beta`.
    Oracle {
        beta: f64,
    },
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DacOptions {
    /// Closeness scale `M`.
    pub m: f64,
    pub h: HSelection,
    pub fit: FitOptions,
}

impl Default for DacOptions {
    fn default() -> Self {
        Self {
            m: 5.0,
            h: HSelection::Practical,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub window: usize,
    pub players: usize,
    pub converged: bool,
    pub iterations: usize,
    pub monotone: bool,
    pub n_components: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DacDiagnostics {
    pub h: f64,
    pub k_leagues: usize,
    pub close_edges: usize,
    pub deadlock_merged: bool,
    pub fits: Vec<FitSummary>,
    pub converged_all: bool,
    pub relations: RelationStats,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct DacOutput {
    pub rank: RankVector,
    pub partition: LeaguePartition,
    pub relations: RelationMatrix,
    pub diagnostics: DacDiagnostics,
}

fn resolve_h(dataset: &ComparisonDataset, opts: &DacOptions) -> Result<f64> {
    let h = match opts.h {
        HSelection::Practical => practical_h(dataset, opts.m),
        HSelection::DataDriven => data_driven_h(dataset, opts.m),
        HSelection::Oracle { beta } => {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(invalid(format!(
                    "oracle threshold needs beta > 0, got {beta}"
                )));
            }
            oracle_h(dataset.p(), opts.m, beta)
        }
        HSelection::Fixed(h) => h,
    };
    if !(h >= 0.0) {
        return Err(invalid(format!(
            "threshold h must be non-negative, got {h}"
        )));
    }
    Ok(h)
}

/// Window of leagues `k - 1 ..= k + 2`, clipped to the partition.
fn window_players(partition: &LeaguePartition, k: usize) -> Vec<usize> {
    let leagues = partition.leagues();
    let lo = k.saturating_sub(1);
    let hi = (k + 3).min(leagues.len());
    leagues[lo..hi].iter().flatten().copied().collect()
}

pub fn divide_and_conquer_rank(
    dataset: &ComparisonDataset,
    opts: &DacOptions,
) -> Result<DacOutput> {
    if !(opts.m > 0.0 && opts.m.is_finite()) {
        return Err(invalid(format!("M must be positive, got {}", opts.m)));
    }
    let n = dataset.n();
    let h = resolve_h(dataset, opts)?;
    let partition = league_partition(dataset, opts.m, h);
    let close = build_close_edges(dataset, opts.m);
    let k_total = partition.len();

    let windows: Vec<Vec<usize>> = if k_total == 1 {
        vec![(0..n).collect()]
    } else {
        (0..k_total - 1)
            .map(|k| window_players(&partition, k))
            .collect()
    };
    let fits: Vec<LocalFit> = windows
        .par_iter()
        .map(|players| fit_local_mle(dataset, &close, players, &opts.fit))
        .collect::<Result<_>>()?;

    let aligned: Vec<_> = fits
        .par_iter()
        .map(|fit| align_components(dataset, fit, &opts.fit))
        .collect();
    let estimates: Vec<WindowEstimate> = fits
        .iter()
        .zip(&aligned)
        .map(|(fit, a)| WindowEstimate {
            players: fit.players.clone(),
            theta: a.theta.clone(),
            group: a.group.clone(),
        })
        .collect();

    let mut relations = RelationMatrix::new(n);
    let stats = within_league_relations(&partition, &estimates, &mut relations)?;
    cross_league_relations(&partition, &mut relations);
    let rank = rank_from_relations(&relations)?;

    let mut warnings = Vec::new();
    if partition.deadlock_merged {
        warnings
            .push("league partition stalled; remainder merged into previous league".to_string());
    }
    if stats.disconnected_pairs > 0 {
        warnings.push(format!(
            "{} pairs compared without a connecting path of comparisons",
            stats.disconnected_pairs
        ));
    }
    let unconverged = fits
        .iter()
        .zip(&aligned)
        .filter(|(f, a)| !f.converged || !a.converged)
        .count();
    if unconverged > 0 {
        warnings.push(format!("{unconverged} local fits hit the iteration cap"));
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let diagnostics = DacDiagnostics {
        h,
        k_leagues: k_total,
        close_edges: close.len(),
        deadlock_merged: partition.deadlock_merged,
        fits: fits
            .iter()
            .enumerate()
            .map(|(window, f)| FitSummary {
                window,
                players: f.players.len(),
                converged: f.converged,
                iterations: f.iterations,
                monotone: f.monotone,
                n_components: f.n_components,
            })
            .collect(),
        converged_all: unconverged == 0,
        relations: stats,
        warnings,
    };
    Ok(DacOutput {
        rank,
        partition,
        relations,
        diagnostics,
    })
}
