//! Rank Centrality: rank players by the stationary distribution of a random
//! walk that moves from a player towards the opponents who beat it.

use crate::error::{invalid, Result};
use crate::mle::rank_from_scores;
use crate::model::{ComparisonDataset, RankVector};

/// Row-stochastic transition matrix stored by rows over the comparison graph.
///
/// Off-diagonal `P[i][j] = ybar_ji / d` on edges (all-games win rate of `j`
/// over `i`), with `d` twice the maximum degree; the diagonal takes the rest.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    d: f64,
    diagonal: Vec<f64>,
    /// `(j, P[i][j])` for every neighbor `j` of `i`.
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.diagonal.len()
    }

    pub fn normalizer(&self) -> f64 {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        self.rows[i]
            .iter()
            .find(|&&(k, _)| k == j)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.diagonal[i] + self.rows[i].iter().map(|&(_, v)| v).sum::<f64>()
    }

    /// `pi P`, exploiting the symmetric sparsity pattern.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = pi.iter().zip(&self.diagonal).map(|(p, d)| p * d).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let mass = pi[i];
            for &(j, v) in row {
                out[j] += mass * v;
            }
        }
        out
    }

    /// Dense copy, row-major. Intended for small chains.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Builds the transition matrix with the default normalizer `2 * max degree`.
pub fn build_transition_matrix(dataset: &ComparisonDataset) -> Result<TransitionMatrix> {
    let d = 2.0 * dataset.max_degree() as f64;
    build_transition_matrix_with(dataset, d)
}

/// Same chain with an explicit normalizer `d >= 2 * max degree`; a larger
/// `d` only makes the walk lazier.
pub fn build_transition_matrix_with(
    dataset: &ComparisonDataset,
    d: f64,
) -> Result<TransitionMatrix> {
    let max_degree = dataset.max_degree();
    if max_degree == 0 {
        return Err(invalid("transition matrix needs at least one edge"));
    }
    if !(d >= max_degree as f64) {
        return Err(invalid(format!(
            "normalizer {d} smaller than the maximum degree {max_degree}"
        )));
    }
    let n = dataset.n();
    let mut rows = vec![Vec::new(); n];
    let mut diagonal = vec![1.0; n];
    for i in 0..n {
        for &(j, e) in dataset.neighbors(i) {
            let edge = &dataset.edges()[e];
            let v = dataset.full_mean(edge, j) / d;
            rows[i].push((j, v));
            diagonal[i] -= v;
        }
    }
    Ok(TransitionMatrix { d, diagonal, rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stationary {
    pub pi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The chain is not strongly connected; the distribution found depends
    /// on the start vector.
    pub reducible: bool,
}

/// Power iteration from the uniform vector until the L1 change between
/// successive iterates falls below `tol`.
pub fn stationary_distribution(p: &TransitionMatrix, tol: f64, max_iter: usize) -> Stationary {
    let n = p.n();
    let reducible = !strongly_connected(p);
    if reducible {
        log::warn!("transition matrix is reducible; stationary distribution is not unique");
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut next = p.left_multiply(&pi);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        iterations += 1;
        if change < tol {
            converged = true;
            break;
        }
    }
    Stationary {
        pi,
        iterations,
        converged,
        reducible,
    }
}

/// Every state reaches state 0 and is reached from it through positive
/// transitions.
fn strongly_connected(p: &TransitionMatrix) -> bool {
    let n = p.n();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in p.rows.iter().enumerate() {
        for &(j, v) in row {
            if v > 0.0 {
                reverse[j].push(i);
            }
        }
    }
    let reach_all = |next: &dyn Fn(usize) -> Vec<usize>| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for y in next(x) {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == n
    };
    let forward = |x: usize| -> Vec<usize> {
        p.rows[x]
            .iter()
            .filter(|&&(_, v)| v > 0.0)
            .map(|&(j, _)| j)
            .collect()
    };
    let backward = |x: usize| reverse[x].clone();
    reach_all(&forward) && reach_all(&backward)
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Clone, Debug)]
pub struct SpectralOutput {
    pub rank: RankVector,
    pub stationary: Stationary,
}

/// Ranks by stationary mass, largest first.
pub fn spectral_rank(dataset: &ComparisonDataset) -> Result<SpectralOutput> {
    let p = build_transition_matrix(dataset)?;
    let stationary = stationary_distribution(&p, DEFAULT_TOL, DEFAULT_MAX_ITER);
    let rank = rank_from_scores(&stationary.pi)?;
    Ok(SpectralOutput { rank, stationary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_regular_skills, sample_comparison_data, EdgeSummary};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn from_full_rates(n: usize, rates: &[(usize, usize, f64)]) -> ComparisonDataset {
        let edges = rates
            .iter()
            .map(|&(i, j, y)| EdgeSummary {
                i,
                j,
                ybar1: y,
                ybar2: y,
            })
            .collect();
        ComparisonDataset::from_edges(n, 1.0, 10, 5, 0, edges).unwrap()
    }

    /// Left fixed point of `P` from a dense linear solve.
    fn dense_stationary(p: &TransitionMatrix) -> Vec<f64> {
        let n = p.n();
        let dense = p.to_dense();
        let pt = DMatrix::from_fn(n, n, |i, j| dense[j][i]);
        // solve (P^T - I) x = 0 with sum(x) = 1 by replacing one equation
        let mut a = pt - DMatrix::identity(n, n);
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = nalgebra::DVector::zeros(n);
        b[n - 1] = 1.0;
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn two_player_matrices() {
        let p = build_transition_matrix(&from_full_rates(2, &[(0, 1, 0.5)])).unwrap();
        assert_eq!(p.to_dense(), vec![vec![0.75, 0.25], vec![0.25, 0.75]]);
        let p = build_transition_matrix(&from_full_rates(2, &[(0, 1, 1.0)])).unwrap();
        assert_eq!(p.to_dense(), vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
    }

    #[test]
    fn empty_graph_rejected() {
        let d = ComparisonDataset::from_edges(3, 0.5, 10, 5, 0, vec![]).unwrap();
        assert!(build_transition_matrix(&d).is_err());
    }

    #[test]
    fn symmetric_chains_are_uniform() {
        let p = build_transition_matrix(&from_full_rates(2, &[(0, 1, 0.5)])).unwrap();
        let st = stationary_distribution(&p, 1e-12, 1000);
        assert_abs_diff_eq!(st.pi[0], 0.5, epsilon = 1e-12);
        let d = from_full_rates(3, &[(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)]);
        let st = stationary_distribution(&build_transition_matrix(&d).unwrap(), 1e-12, 1000);
        for x in st.pi {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_eq!(spectral_rank(&d).unwrap().rank, RankVector::identity(3));
    }

    #[test]
    fn asymmetric_chain_matches_direct_solve() {
        let d = from_full_rates(3, &[(0, 1, 0.7), (1, 2, 0.6), (0, 2, 0.8)]);
        let p = build_transition_matrix(&d).unwrap();
        let st = stationary_distribution(&p, 1e-14, 100_000);
        assert!(st.converged && !st.reducible);
        let direct = dense_stationary(&p);
        for (a, b) in st.pi.iter().zip(&direct) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        assert_eq!(spectral_rank(&d).unwrap().rank, RankVector::identity(3));
    }

    #[test]
    fn winner_ranked_first() {
        let d = from_full_rates(2, &[(0, 1, 0.9)]);
        assert_eq!(spectral_rank(&d).unwrap().rank.as_slice(), &[1, 2]);
        let d = from_full_rates(2, &[(0, 1, 0.1)]);
        assert_eq!(spectral_rank(&d).unwrap().rank.as_slice(), &[2, 1]);
    }

    #[test]
    fn reducible_chain_flagged() {
        // player 0 never loses: no transition leaves it
        let d = from_full_rates(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 0.5)]);
        let st = stationary_distribution(&build_transition_matrix(&d).unwrap(), 1e-12, 10_000);
        assert!(st.reducible);
        assert!(st.pi[0] > 0.99);
    }

    #[test]
    fn sampled_chain_properties() {
        let s = make_regular_skills(80, 0.02).unwrap();
        let d = sample_comparison_data(&s, &RankVector::identity(80), 0.3, 30, 10, 5).unwrap();
        let p = build_transition_matrix(&d).unwrap();
        for i in 0..p.n() {
            assert_abs_diff_eq!(p.row_sum(i), 1.0, epsilon = 1e-12);
        }
        let tol = 1e-12;
        let st = stationary_distribution(&p, tol, 1_000_000);
        let moved = p.left_multiply(&st.pi);
        let residual: f64 = moved.iter().zip(&st.pi).map(|(a, b)| (a - b).abs()).sum();
        assert!(residual < 10.0 * tol);

        // a lazier chain keeps the ranking
        let lazy = build_transition_matrix_with(&d, 3.0 * p.normalizer()).unwrap();
        let st_lazy = stationary_distribution(&lazy, 1e-14, 1_000_000);
        assert_eq!(
            rank_from_scores(&st.pi).unwrap(),
            rank_from_scores(&st_lazy.pi).unwrap()
        );
    }
}
