//! Order-level reference values for the minimax ranking error.
//!
//! Constants and failure-probability factors are set to one, so the values
//! are meant for comparing regimes and slopes, not as exact predictions.

use serde::{Deserialize, Serialize};

use crate::model::{sigmoid_derivative, SkillVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Exponential,
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxRate {
    pub regime: Regime,
    pub snr: f64,
    pub value: f64,
}

fn information_sum(skills: &SkillVector, i: usize) -> f64 {
    let theta = skills.theta();
    theta
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &t)| sigmoid_derivative(theta[i] - t))
        .sum()
}

/// `V_i = n / sum_{j != i} psi'(theta_i - theta_j)`, `i` indexing skills
/// from the strongest.
pub fn variance_function(skills: &SkillVector, i: usize) -> f64 {
    skills.len() as f64 / information_sum(skills, i)
}

/// `L p sum_{j != i} psi'(theta_i - theta_j)`.
pub fn oracle_fisher(skills: &SkillVector, i: usize, games: f64, p: f64) -> f64 {
    games * p * information_sum(skills, i)
}

fn polynomial(scale: f64, n: usize) -> f64 {
    scale.sqrt().min(n as f64)
}

/// BTL rate with `SNR = L p beta^2 / max(beta, 1/n)`.
///
/// Above one, `(1/(n-1)) sum_i exp(-n p L gap_i^2 / (4 V_i))` over adjacent
/// gaps; otherwise `min(n, sqrt(max(beta, 1/n) / (L p beta^2)))`.
pub fn minimax_rate_btl(skills: &SkillVector, p: f64, games: f64, beta: f64) -> MinimaxRate {
    let n = skills.len();
    let floor = beta.max(1.0 / n as f64);
    let snr = games * p * beta * beta / floor;
    if snr > 1.0 {
        let theta = skills.theta();
        let total: f64 = (0..n - 1)
            .map(|i| {
                let gap = theta[i] - theta[i + 1];
                (-(n as f64) * p * games * gap * gap / (4.0 * variance_function(skills, i))).exp()
            })
            .sum();
        MinimaxRate {
            regime: Regime::Exponential,
            snr,
            value: total / (n - 1) as f64,
        }
    } else {
        MinimaxRate {
            regime: Regime::Polynomial,
            snr,
            value: polynomial(floor / (games * p * beta * beta), n),
        }
    }
}

/// Gaussian rate with `SNR = n p beta^2 / sigma2`.
pub fn minimax_rate_gaussian(skills: &SkillVector, p: f64, sigma2: f64, beta: f64) -> MinimaxRate {
    let n = skills.len();
    let snr = n as f64 * p * beta * beta / sigma2;
    if snr > 1.0 {
        let theta = skills.theta();
        let total: f64 = theta
            .windows(2)
            .map(|w| {
                let gap = w[0] - w[1];
                (-(n as f64) * p * gap * gap / (4.0 * sigma2)).exp()
            })
            .sum();
        MinimaxRate {
            regime: Regime::Exponential,
            snr,
            value: total / (n - 1) as f64,
        }
    } else {
        MinimaxRate {
            regime: Regime::Polynomial,
            snr,
            value: polynomial(sigma2 / (n as f64 * p * beta * beta), n),
        }
    }
}
