//! Gaussian pairwise comparisons and the graph-Laplacian least-squares
//! estimator.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mle::rank_from_scores;
use crate::model::{logit, pair_stream, ComparisonDataset, RankVector, SkillVector};

/// Observation `y` of `theta_i - theta_j` on edge `(i, j)`, `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianEdge {
    pub i: usize,
    pub j: usize,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDataset {
    pub n: usize,
    pub p: f64,
    pub sigma2: f64,
    pub seed: u64,
    pub edges: Vec<GaussianEdge>,
}

impl GaussianDataset {
    /// Observation oriented from `i`'s side; antisymmetric by construction.
    pub fn y(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        self.edges
            .binary_search_by_key(&(a, b), |e| (e.i, e.j))
            .ok()
            .map(|k| sign * self.edges[k].y)
    }
}

const STREAM_GAUSSIAN_EDGE: u64 = 0;
const STREAM_GAUSSIAN_NOISE: u64 = 1;

/// Erdős–Rényi graph with one `N(theta_{r_i} - theta_{r_j}, sigma2)` draw per edge.
pub fn sample_gaussian_data(
    skills: &SkillVector,
    rank: &RankVector,
    p: f64,
    sigma2: f64,
    seed: u64,
) -> Result<GaussianDataset> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!(
            "edge probability must lie in (0, 1], got {p}"
        )));
    }
    let n = skills.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if pair_stream(seed, n, i, j, STREAM_GAUSSIAN_EDGE).random::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    let mut data = sample_gaussian_on_graph(skills, rank, &pairs, sigma2, seed)?;
    data.p = p;
    Ok(data)
}

/// Gaussian observations on a fixed set of edges.
pub fn sample_gaussian_on_graph(
    skills: &SkillVector,
    rank: &RankVector,
    pairs: &[(usize, usize)],
    sigma2: f64,
    seed: u64,
) -> Result<GaussianDataset> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(invalid(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    let n = skills.len();
    if rank.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: rank.len(),
        });
    }
    let noise = Normal::new(0.0, sigma2.sqrt()).map_err(|e| invalid(e.to_string()))?;
    let skill_of = |i: usize| skills.theta()[rank.rank_of(i) - 1];
    let mut edges: Vec<GaussianEdge> = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        if a == b || a >= n || b >= n {
            return Err(invalid(format!("edge ({a}, {b}) invalid for n = {n}")));
        }
        let (i, j) = (a.min(b), a.max(b));
        let mut rng = pair_stream(seed, n, i, j, STREAM_GAUSSIAN_NOISE);
        edges.push(GaussianEdge {
            i,
            j,
            y: skill_of(i) - skill_of(j) + noise.sample(&mut rng),
        });
    }
    edges.sort_by_key(|e| (e.i, e.j));
    if edges
        .windows(2)
        .any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j))
    {
        return Err(invalid("duplicate edge"));
    }
    Ok(GaussianDataset {
        n,
        p: f64::NAN,
        sigma2,
        seed,
        edges,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquaresFit {
    /// Estimated skills, each connected component centered to sum zero.
    pub theta: Vec<f64>,
    pub n_components: usize,
    /// `max_i |(L theta - b)_i|`, the gradient of the objective up to a factor 2.
    pub residual: f64,
}

// Components up to this size are solved densely; larger ones use CG.
const DENSE_LIMIT: usize = 2000;

/// Minimizes `sum_(i,j) (y_ij - (theta_i - theta_j))^2` over the given
/// observations, with per-component zero-sum normalization.
pub fn laplacian_least_squares(n: usize, obs: &[GaussianEdge]) -> LeastSquaresFit {
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut rhs = vec![0.0; n];
    for e in obs {
        neighbors[e.i].push(e.j);
        neighbors[e.j].push(e.i);
        rhs[e.i] += e.y;
        rhs[e.j] -= e.y;
    }

    let (component, n_components) = components(&neighbors);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_components];
    for (i, &c) in component.iter().enumerate() {
        members[c].push(i);
    }

    let mut theta = vec![0.0; n];
    for nodes in &members {
        if nodes.len() < 2 {
            continue;
        }
        let solution = if nodes.len() <= DENSE_LIMIT {
            solve_dense(nodes, &neighbors, &rhs)
        } else {
            solve_cg(nodes, &neighbors, &rhs)
        };
        let mean = solution.iter().sum::<f64>() / nodes.len() as f64;
        for (&node, value) in nodes.iter().zip(solution) {
            theta[node] = value - mean;
        }
    }

    let residual = (0..n)
        .map(|i| {
            let lt = neighbors[i].len() as f64 * theta[i]
                - neighbors[i].iter().map(|&j| theta[j]).sum::<f64>();
            (lt - rhs[i]).abs()
        })
        .fold(0.0, f64::max);

    LeastSquaresFit {
        theta,
        n_components,
        residual,
    }
}

fn components(neighbors: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let n = neighbors.len();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &y in &neighbors[x] {
                if label[y] == usize::MAX {
                    label[y] = count;
                    stack.push(y);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Grounds the last node of the component at zero and solves the reduced
/// Laplacian system by Cholesky.
fn solve_dense(nodes: &[usize], neighbors: &[Vec<usize>], rhs: &[f64]) -> Vec<f64> {
    let m = nodes.len() - 1;
    let mut local = std::collections::HashMap::with_capacity(nodes.len());
    for (pos, &node) in nodes.iter().enumerate() {
        local.insert(node, pos);
    }
    let mut lap = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (a, &node) in nodes.iter().enumerate().take(m) {
        lap[(a, a)] = neighbors[node].len() as f64;
        b[a] = rhs[node];
        for nb in &neighbors[node] {
            let c = local[nb];
            if c < m {
                lap[(a, c)] -= 1.0;
            }
        }
    }
    let chol = lap
        .cholesky()
        .expect("grounded Laplacian of a connected graph is positive definite");
    let x = chol.solve(&b);
    let mut out: Vec<f64> = x.iter().copied().collect();
    out.push(0.0);
    out
}

/// Conjugate gradient on the full component system, kept orthogonal to the
/// constant vector.
fn solve_cg(nodes: &[usize], neighbors: &[Vec<usize>], rhs: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let mut local = std::collections::HashMap::with_capacity(m);
    for (pos, &node) in nodes.iter().enumerate() {
        local.insert(node, pos);
    }
    let adj: Vec<Vec<usize>> = nodes
        .iter()
        .map(|node| neighbors[*node].iter().map(|nb| local[nb]).collect())
        .collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| adj[i].len() as f64 * x[i] - adj[i].iter().map(|&j| x[j]).sum::<f64>())
            .collect()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut b: Vec<f64> = nodes.iter().map(|&node| rhs[node]).collect();
    let mean = b.iter().sum::<f64>() / m as f64;
    b.iter_mut().for_each(|v| *v -= mean);

    let mut x = vec![0.0; m];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = 1e-24 * dot(&b, &b).max(1e-300);
    for _ in 0..10 * m {
        if rr <= stop {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for k in 0..m {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for k in 0..m {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_next;
    }
    x
}

pub fn gaussian_least_squares(dataset: &GaussianDataset) -> LeastSquaresFit {
    let fit = laplacian_least_squares(dataset.n, &dataset.edges);
    if fit.n_components > 1 {
        log::warn!(
            "comparison graph has {} components; cross-component order is arbitrary",
            fit.n_components
        );
    }
    fit
}

pub fn gaussian_rank(dataset: &GaussianDataset) -> Result<(RankVector, LeastSquaresFit)> {
    let fit = gaussian_least_squares(dataset);
    Ok((rank_from_scores(&fit.theta)?, fit))
}

/// Least squares on the empirical log-odds of BTL win rates.
///
/// All-games win rates are clipped to `[1 / (2L), 1 - 1 / (2L)]` before the
/// log-odds transform.
pub fn logit_least_squares_rank(
    dataset: &ComparisonDataset,
) -> Result<(RankVector, LeastSquaresFit)> {
    let eps = 0.5 / dataset.games() as f64;
    let obs: Vec<GaussianEdge> = dataset
        .edges()
        .iter()
        .map(|e| GaussianEdge {
            i: e.i,
            j: e.j,
            y: logit(dataset.full_mean(e, e.i).clamp(eps, 1.0 - eps)),
        })
        .collect();
    let fit = laplacian_least_squares(dataset.n(), &obs);
    Ok((rank_from_scores(&fit.theta)?, fit))
}
