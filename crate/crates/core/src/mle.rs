//! Likelihood machinery: close-edge filtering, the local negative
//! log-likelihood and its gradient, and maximum likelihood fits by
//! minorization-maximization (MM) or gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_sigmoid, sigmoid, ComparisonDataset, RankVector};

/// Edges whose preliminary win rate lies in `[sigmoid(-M), sigmoid(M)]`,
/// i.e. games between players of comparable skill.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CloseEdgeSet {
    members: Vec<usize>,
    mask: Vec<bool>,
}

impl CloseEdgeSet {
    /// Indices into [`ComparisonDataset::edges`], ascending.
    pub fn indices(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.mask.get(edge).copied().unwrap_or(false)
    }

    /// Endpoint pairs `(i, j)` with `i < j`.
    pub fn pairs<'a>(
        &'a self,
        dataset: &'a ComparisonDataset,
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.members
            .iter()
            .map(|&e| (dataset.edges()[e].i, dataset.edges()[e].j))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn build_close_edges(dataset: &ComparisonDataset, m: f64) -> CloseEdgeSet {
    let (lo, hi) = (sigmoid(-m), sigmoid(m));
    let mask: Vec<bool> = dataset
        .edges()
        .iter()
        .map(|e| lo <= e.ybar1 && e.ybar1 <= hi)
        .collect();
    let members = mask
        .iter()
        .enumerate()
        .filter_map(|(idx, &c)| c.then_some(idx))
        .collect();
    CloseEdgeSet { members, mask }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solver {
    /// Hunter's minorization-maximization updates.
    Mm,
    /// Gradient descent with the fixed step `1 / Lipschitz bound`.
    GradientDescent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop once the largest coordinate change of an iteration is below this.
    pub tol: f64,
    pub solver: Solver,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-8,
            solver: Solver::Mm,
        }
    }
}

/// Result of a likelihood fit over a set of players.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFit {
    /// Global player indices, ascending.
    pub players: Vec<usize>,
    /// Estimated skills, aligned with `players`; each connected component
    /// of the comparison graph sums to zero.
    pub theta: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub initial_nll: f64,
    pub final_nll: f64,
    /// Every iteration left the objective non-increasing.
    pub monotone: bool,
    /// Connected-component label of each player, aligned with `players`.
    pub component: Vec<usize>,
    pub n_components: usize,
}

impl LocalFit {
    fn position(&self, player: usize) -> Option<usize> {
        self.players.binary_search(&player).ok()
    }

    pub fn theta_of(&self, player: usize) -> Option<f64> {
        self.position(player).map(|p| self.theta[p])
    }

    pub fn component_of(&self, player: usize) -> Option<usize> {
        self.position(player).map(|p| self.component[p])
    }

    pub fn is_connected(&self) -> bool {
        self.n_components <= 1
    }
}

/// One observed pair in local coordinates: `a` won fraction `y` against `b`.
#[derive(Clone, Copy, Debug)]
struct Obs {
    a: usize,
    b: usize,
    y: f64,
}

/// Pairwise logistic objective `sum [-y ln s(d) - (1-y) ln s(-d)]`,
/// `d = theta_a - theta_b`, over `dim` coordinates.
struct Objective {
    dim: usize,
    obs: Vec<Obs>,
}

impl Objective {
    fn nll(&self, theta: &[f64]) -> f64 {
        self.obs
            .iter()
            .map(|o| {
                let d = theta[o.a] - theta[o.b];
                -(o.y * log_sigmoid(d) + (1.0 - o.y) * log_sigmoid(-d))
            })
            .sum()
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for o in &self.obs {
            let r = sigmoid(theta[o.a] - theta[o.b]) - o.y;
            g[o.a] += r;
            g[o.b] -= r;
        }
        g
    }

    /// One pass computing the objective and, per coordinate, the expected
    /// wins `sum_j sigmoid(theta_i - theta_j)` under the current iterate.
    fn nll_and_expected_wins(&self, theta: &[f64], expected: &mut [f64]) -> f64 {
        expected.iter_mut().for_each(|x| *x = 0.0);
        let mut nll = 0.0;
        for o in &self.obs {
            let d = theta[o.a] - theta[o.b];
            let e = (-d.abs()).exp();
            let (s_pos, s_neg) = if d >= 0.0 {
                (1.0 / (1.0 + e), e / (1.0 + e))
            } else {
                (e / (1.0 + e), 1.0 / (1.0 + e))
            };
            let l1p = e.ln_1p();
            let log_pos = -l1p + d.min(0.0);
            let log_neg = -l1p + (-d).min(0.0);
            nll -= o.y * log_pos + (1.0 - o.y) * log_neg;
            expected[o.a] += s_pos;
            expected[o.b] += s_neg;
        }
        nll
    }

    fn observed_wins(&self) -> Vec<f64> {
        let mut wins = vec![0.0; self.dim];
        for o in &self.obs {
            wins[o.a] += o.y;
            wins[o.b] += 1.0 - o.y;
        }
        wins
    }

    fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.dim];
        for o in &self.obs {
            deg[o.a] += 1.0;
            deg[o.b] += 1.0;
        }
        deg
    }

    fn components(&self) -> (Vec<usize>, usize) {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for o in &self.obs {
            let (ra, rb) = (find(&mut parent, o.a), find(&mut parent, o.b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut label = vec![usize::MAX; self.dim];
        let mut out = vec![0; self.dim];
        let mut count = 0;
        for x in 0..self.dim {
            let root = find(&mut parent, x);
            if label[root] == usize::MAX {
                label[root] = count;
                count += 1;
            }
            out[x] = label[root];
        }
        (out, count)
    }
}

fn center_components(theta: &mut [f64], component: &[usize], n_components: usize) {
    let mut sum = vec![0.0; n_components];
    let mut count = vec![0usize; n_components];
    for (t, &c) in theta.iter().zip(component) {
        sum[c] += t;
        count[c] += 1;
    }
    for (t, &c) in theta.iter_mut().zip(component) {
        *t -= sum[c] / count[c] as f64;
    }
}

// Allowed per-iteration increase of the objective, relative to its size,
// before an iteration counts as non-monotone. Covers summation round-off.
const MONOTONE_SLACK: f64 = 1e-11;

struct FitOutcome {
    theta: Vec<f64>,
    converged: bool,
    iterations: usize,
    initial_nll: f64,
    final_nll: f64,
    monotone: bool,
    component: Vec<usize>,
    n_components: usize,
}

fn minimize(obj: &Objective, opts: &FitOptions) -> FitOutcome {
    let (component, n_components) = obj.components();
    let mut theta = vec![0.0; obj.dim];
    let mut expected = vec![0.0; obj.dim];
    let wins = obj.observed_wins();
    let log_wins: Vec<f64> = wins.iter().map(|w| w.ln()).collect();
    let step = {
        let max_deg = obj.degrees().into_iter().fold(0.0, f64::max);
        if max_deg > 0.0 {
            2.0 / max_deg
        } else {
            0.0
        }
    };

    let mut prev_nll = f64::INFINITY;
    let mut initial_nll = f64::NAN;
    let mut monotone = true;
    let mut converged = false;
    let mut iterations = 0;
    let mut next = vec![0.0; obj.dim];

    while iterations < opts.max_iter {
        let nll = obj.nll_and_expected_wins(&theta, &mut expected);
        if iterations == 0 {
            initial_nll = nll;
        } else if nll > prev_nll + MONOTONE_SLACK * (1.0 + prev_nll.abs()) {
            monotone = false;
        }
        prev_nll = nll;

        for i in 0..obj.dim {
            next[i] = if expected[i] > 0.0 {
                match opts.solver {
                    Solver::Mm => theta[i] + log_wins[i] - expected[i].ln(),
                    Solver::GradientDescent => theta[i] - step * (expected[i] - wins[i]),
                }
            } else {
                theta[i]
            };
        }
        center_components(&mut next, &component, n_components);
        let change = theta
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut theta, &mut next);
        iterations += 1;
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    let final_nll = obj.nll(&theta);
    if iterations == 0 {
        initial_nll = final_nll;
    } else if final_nll > prev_nll + MONOTONE_SLACK * (1.0 + prev_nll.abs()) {
        monotone = false;
    }
    if !converged {
        log::debug!("fit stopped after {iterations} iterations without converging");
    }
    FitOutcome {
        theta,
        converged,
        iterations,
        initial_nll,
        final_nll,
        monotone,
        component,
        n_components,
    }
}

fn sorted_players(players: &[usize]) -> Vec<usize> {
    let mut p = players.to_vec();
    p.sort_unstable();
    p.dedup();
    p
}

/// Observations on close edges with both endpoints among `players`
/// (ascending, deduplicated), using `main_rate` as the win rate of the
/// lower-indexed endpoint.
fn local_observations(
    dataset: &ComparisonDataset,
    close: &CloseEdgeSet,
    players: &[usize],
    main_rate: impl Fn(f64) -> f64,
) -> Vec<Obs> {
    let mut position = vec![usize::MAX; dataset.n()];
    for (pos, &p) in players.iter().enumerate() {
        position[p] = pos;
    }
    let mut obs = Vec::new();
    for (pos_a, &a) in players.iter().enumerate() {
        for &(b, e) in dataset.neighbors(a) {
            if b > a && position[b] != usize::MAX && close.contains(e) {
                obs.push(Obs {
                    a: pos_a,
                    b: position[b],
                    y: main_rate(dataset.edges()[e].ybar2),
                });
            }
        }
    }
    obs
}

fn check_theta_len(theta: &[f64], players: &[usize]) -> Result<()> {
    if theta.len() != players.len() {
        return Err(Error::LengthMismatch {
            left: theta.len(),
            right: players.len(),
        });
    }
    Ok(())
}

/// Local negative log-likelihood on the main games of close edges inside
/// `players`. `theta` is aligned with `players` in ascending order.
pub fn local_nll(
    theta: &[f64],
    dataset: &ComparisonDataset,
    close: &CloseEdgeSet,
    players: &[usize],
) -> Result<f64> {
    let players = sorted_players(players);
    check_theta_len(theta, &players)?;
    let obs = local_observations(dataset, close, &players, |y| y);
    Ok(Objective {
        dim: players.len(),
        obs,
    }
    .nll(theta))
}

/// Analytic gradient of [`local_nll`]: `sum_j (sigmoid(theta_i - theta_j) - ybar2_ij)`.
pub fn local_nll_gradient(
    theta: &[f64],
    dataset: &ComparisonDataset,
    close: &CloseEdgeSet,
    players: &[usize],
) -> Result<Vec<f64>> {
    let players = sorted_players(players);
    check_theta_len(theta, &players)?;
    let obs = local_observations(dataset, close, &players, |y| y);
    Ok(Objective {
        dim: players.len(),
        obs,
    }
    .gradient(theta))
}

/// Minimizes the local negative log-likelihood over `players`.
///
/// Main-game win rates are clipped to `[eps, 1 - eps]` with
/// `eps = 1 / (2 (L - L1))` so the optimum is finite. The iteration starts
/// from zero, and each connected component is centered to sum zero.
pub fn fit_local_mle(
    dataset: &ComparisonDataset,
    close: &CloseEdgeSet,
    players: &[usize],
    opts: &FitOptions,
) -> Result<LocalFit> {
    let players = sorted_players(players);
    if players.is_empty() {
        return Err(crate::error::invalid("local fit needs at least one player"));
    }
    if let Some(&bad) = players.iter().find(|&&p| p >= dataset.n()) {
        return Err(crate::error::invalid(format!("player {bad} out of range")));
    }
    let eps = 0.5 / dataset.main_games() as f64;
    let obs = local_observations(dataset, close, &players, |y| y.clamp(eps, 1.0 - eps));
    let out = minimize(
        &Objective {
            dim: players.len(),
            obs,
        },
        opts,
    );
    Ok(into_fit(players, out))
}

/// Maximum likelihood over all players and all edges, using the all-games
/// win rates clipped to `[1 / (2L), 1 - 1 / (2L)]`.
pub fn fit_global_mle(dataset: &ComparisonDataset, opts: &FitOptions) -> LocalFit {
    let eps = 0.5 / dataset.games() as f64;
    let obs = dataset
        .edges()
        .iter()
        .map(|e| Obs {
            a: e.i,
            b: e.j,
            y: dataset.full_mean(e, e.i).clamp(eps, 1.0 - eps),
        })
        .collect();
    let out = minimize(
        &Objective {
            dim: dataset.n(),
            obs,
        },
        opts,
    );
    into_fit((0..dataset.n()).collect(), out)
}

fn into_fit(players: Vec<usize>, out: FitOutcome) -> LocalFit {
    LocalFit {
        players,
        theta: out.theta,
        converged: out.converged,
        iterations: out.iterations,
        initial_nll: out.initial_nll,
        final_nll: out.final_nll,
        monotone: out.monotone,
        component: out.component,
        n_components: out.n_components,
    }
}

/// Skills of a local fit after shifting each connected component.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentAlignment {
    /// Shifted skills aligned with the fit's players.
    pub theta: Vec<f64>,
    /// Label of the group of components linked by at least one edge,
    /// aligned with the fit's players.
    pub group: Vec<usize>,
    pub n_groups: usize,
    pub converged: bool,
}

/// Places the connected components of `fit` relative to each other.
///
/// Skills inside a component are kept; one offset per component is fitted
/// by likelihood over the main games of edges between players of the fit
/// that lie in different components, clipped as in [`fit_local_mle`].
/// Components with no such edge keep offset zero.
pub fn align_components(
    dataset: &ComparisonDataset,
    fit: &LocalFit,
    opts: &FitOptions,
) -> ComponentAlignment {
    let k = fit.n_components;
    if k <= 1 {
        return ComponentAlignment {
            theta: fit.theta.clone(),
            group: vec![0; fit.players.len()],
            n_groups: 1.min(fit.players.len()),
            converged: true,
        };
    }
    let mut position = vec![usize::MAX; dataset.n()];
    for (pos, &p) in fit.players.iter().enumerate() {
        position[p] = pos;
    }
    let eps = 0.5 / dataset.main_games() as f64;
    // (component a, component b, fixed part of the gap, win rate of a)
    let mut cross: Vec<(usize, usize, f64, f64)> = Vec::new();
    for (pa, &a) in fit.players.iter().enumerate() {
        for &(b, e) in dataset.neighbors(a) {
            let pb = position[b];
            if b > a && pb != usize::MAX && fit.component[pa] != fit.component[pb] {
                cross.push((
                    fit.component[pa],
                    fit.component[pb],
                    fit.theta[pa] - fit.theta[pb],
                    dataset.edges()[e].ybar2.clamp(eps, 1.0 - eps),
                ));
            }
        }
    }

    let groups = Objective {
        dim: k,
        obs: cross.iter().map(|&(a, b, _, y)| Obs { a, b, y }).collect(),
    };
    let (group_of_component, n_groups) = groups.components();
    let max_deg = groups.degrees().into_iter().fold(0.0, f64::max);

    let mut offset = vec![0.0; k];
    let mut converged = max_deg == 0.0;
    if !converged {
        // gradient descent with step 1 / Lipschitz bound
        let step = 2.0 / max_deg;
        for _ in 0..opts.max_iter {
            let mut grad = vec![0.0; k];
            for &(a, b, gap, y) in &cross {
                let r = sigmoid(offset[a] - offset[b] + gap) - y;
                grad[a] += r;
                grad[b] -= r;
            }
            let change = grad.iter().map(|g| (step * g).abs()).fold(0.0, f64::max);
            for (o, g) in offset.iter_mut().zip(&grad) {
                *o -= step * g;
            }
            if change < opts.tol {
                converged = true;
                break;
            }
        }
    }

    ComponentAlignment {
        theta: fit
            .theta
            .iter()
            .zip(&fit.component)
            .map(|(t, &c)| t + offset[c])
            .collect(),
        group: fit
            .component
            .iter()
            .map(|&c| group_of_component[c])
            .collect(),
        n_groups,
        converged,
    }
}

/// Ranks by descending score; equal scores go to the lower index first.
pub fn rank_from_scores(scores: &[f64]) -> Result<RankVector> {
    if let Some(pos) = scores.iter().position(|s| s.is_nan()) {
        return Err(crate::error::invalid(format!("score {pos} is NaN")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    RankVector::from_order(&order)
}
