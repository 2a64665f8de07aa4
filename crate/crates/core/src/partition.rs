//! League partition: groups players into skill-adjacent blocks using
//! dominance counts from the preliminary games.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{logit, sigmoid, ComparisonDataset, RankVector};

/// Ordered, disjoint leagues covering every player; league 0 is the strongest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaguePartition {
    leagues: Vec<Vec<usize>>,
    /// A round selected nobody and the unclassified players were merged
    /// into the previous league.
    pub deadlock_merged: bool,
}

impl LeaguePartition {
    /// Checks coverage and disjointness over `0..n`.
    pub fn new(leagues: Vec<Vec<usize>>, n: usize) -> crate::Result<Self> {
        let mut seen = vec![false; n];
        if leagues.is_empty() {
            return Err(crate::error::invalid("partition needs at least one league"));
        }
        for league in &leagues {
            if league.is_empty() {
                return Err(crate::error::invalid("empty league"));
            }
            for &i in league {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(crate::error::invalid(format!(
                        "player {i} out of range or in two leagues"
                    )));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(crate::error::invalid(
                "partition does not cover every player",
            ));
        }
        Ok(Self {
            leagues,
            deadlock_merged: false,
        })
    }

    pub fn leagues(&self) -> &[Vec<usize>] {
        &self.leagues
    }

    /// Number of leagues, `K`.
    pub fn len(&self) -> usize {
        self.leagues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leagues.is_empty()
    }

    pub fn n(&self) -> usize {
        self.leagues.iter().map(Vec::len).sum()
    }

    /// League index of every player.
    pub fn league_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n()];
        for (k, league) in self.leagues.iter().enumerate() {
            for &i in league {
                out[i] = k;
            }
        }
        out
    }
}

/// For each player in `remaining`, the number of opponents in `remaining`
/// that dominated it in the preliminary games (win rate `<= sigmoid(-2M)`).
///
/// `in_remaining` must be the membership mask of `remaining`.
fn dominance_counts_masked(
    dataset: &ComparisonDataset,
    remaining: &[usize],
    in_remaining: &[bool],
    m: f64,
) -> Vec<usize> {
    let threshold = sigmoid(-2.0 * m);
    remaining
        .par_iter()
        .map(|&i| {
            dataset
                .neighbors(i)
                .iter()
                .filter(|&&(j, e)| in_remaining[j] && dataset.edges()[e].ybar1_for(i) <= threshold)
                .count()
        })
        .collect()
}

/// Dominance counts `w_i` over the players in `remaining`, in the same order.
pub fn dominance_counts(dataset: &ComparisonDataset, remaining: &[usize], m: f64) -> Vec<usize> {
    let mut mask = vec![false; dataset.n()];
    for &i in remaining {
        mask[i] = true;
    }
    dominance_counts_masked(dataset, remaining, &mask, m)
}

/// Splits the players into leagues.
///
/// Each round takes the unclassified players dominated by at most `h`
/// others (ties included) as the next league. Rounds continue while more
/// than half a league's worth of players is unclassified; the leftover is
/// then merged into the last league. If a round selects nobody, the
/// unclassified players are merged into the previous league and
/// `deadlock_merged` is set.
pub fn league_partition(dataset: &ComparisonDataset, m: f64, h: f64) -> LeaguePartition {
    let n = dataset.n();
    let mut mask = vec![true; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut leagues: Vec<Vec<usize>> = Vec::new();
    let mut deadlock = false;

    loop {
        let counts = dominance_counts_masked(dataset, &remaining, &mask, m);
        let mut league = Vec::new();
        let mut rest = Vec::new();
        for (&i, &w) in remaining.iter().zip(&counts) {
            if w as f64 <= h {
                league.push(i);
            } else {
                rest.push(i);
            }
        }
        if league.is_empty() {
            deadlock = true;
            match leagues.last_mut() {
                Some(last) => last.extend(rest),
                None => leagues.push(rest),
            }
            break;
        }
        for &i in &league {
            mask[i] = false;
        }
        let size = league.len();
        leagues.push(league);
        remaining = rest;
        if (remaining.len() as f64) <= size as f64 / 2.0 {
            if !remaining.is_empty() {
                leagues.last_mut().expect("just pushed").extend(remaining);
            }
            break;
        }
    }

    for league in &mut leagues {
        league.sort_unstable();
    }
    LeaguePartition {
        leagues,
        deadlock_merged: deadlock,
    }
}

/// Data-driven threshold: edges whose preliminary log-odds magnitude lies in
/// `[1.2M, 1.8M]`, divided by `n`. Win rates of exactly 0 or 1 have
/// unbounded log-odds and never count.
pub fn data_driven_h(dataset: &ComparisonDataset, m: f64) -> f64 {
    let (lo, hi) = (1.2 * m, 1.8 * m);
    let hits = dataset
        .edges()
        .iter()
        .filter(|e| e.ybar1 > 0.0 && e.ybar1 < 1.0)
        .filter(|e| {
            let z = logit(e.ybar1).abs();
            lo <= z && z <= hi
        })
        .count();
    hits as f64 / dataset.n() as f64
}

/// Threshold used for the reported simulations: `0.4 / n` times the number
/// of edges whose main-game win rate lies in `[sigmoid(-M), sigmoid(M)]`.
pub fn practical_h(dataset: &ComparisonDataset, m: f64) -> f64 {
    let (lo, hi) = (sigmoid(-m), sigmoid(m));
    let close = dataset
        .edges()
        .iter()
        .filter(|e| lo <= e.ybar2 && e.ybar2 <= hi)
        .count();
    0.4 * close as f64 / dataset.n() as f64
}

/// Oracle threshold `pM / beta`; needs the true minimal gap.
pub fn oracle_h(p: f64, m: f64, beta: f64) -> f64 {
    p * m / beta
}

/// Fraction of interior leagues `k` for which some player in an earlier
/// league is ranked below some player in a later league. Zero when there
/// are fewer than three leagues.
pub fn partition_error_metric(partition: &LeaguePartition, r_star: &RankVector) -> f64 {
    let k = partition.len();
    if k < 3 {
        return 0.0;
    }
    let leagues = partition.leagues();
    // worst (largest) rank among leagues before k; best (smallest) after k
    let mut prefix_max = vec![0usize; k];
    let mut acc = 0;
    for (idx, league) in leagues.iter().enumerate() {
        prefix_max[idx] = acc;
        acc = acc.max(league.iter().map(|&i| r_star.rank_of(i)).max().unwrap_or(0));
    }
    let mut suffix_min = vec![usize::MAX; k];
    let mut acc = usize::MAX;
    for idx in (0..k).rev() {
        suffix_min[idx] = acc;
        acc = acc.min(
            leagues[idx]
                .iter()
                .map(|&i| r_star.rank_of(i))
                .min()
                .unwrap_or(usize::MAX),
        );
    }
    let violations = (1..k - 1)
        .filter(|&idx| prefix_max[idx] > suffix_min[idx])
        .count();
    violations as f64 / (k - 2) as f64
}
