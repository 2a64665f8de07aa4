//! Full ranking of players from partial pairwise comparisons under the
//! Bradley-Terry-Luce (BTL) model.
//!
//! The centerpiece is a divide-and-conquer estimator: players are split into
//! skill-adjacent leagues using dominance counts from preliminary games, a
//! local maximum likelihood fit is run over each window of neighboring
//! leagues, and the resulting pairwise relations are aggregated into a rank.
//!
//! Alongside it the crate provides baselines (global MLE, Rank Centrality,
//! Gaussian least squares), permutation losses, reference calculators for
//! the minimax rates, and a seeded experiment runner.
//!
//! ```
//! use fullrank::{make_regular_skills, sample_comparison_data, RankVector};
//! use fullrank::pipeline::{divide_and_conquer_rank, DacOptions};
//!
//! let skills = make_regular_skills(50, 0.2).unwrap();
//! let truth = RankVector::identity(50);
//! let data = sample_comparison_data(&skills, &truth, 0.8, 40, 10, 7).unwrap();
//! let out = divide_and_conquer_rank(&data, &DacOptions::default()).unwrap();
//! assert!(fullrank::kendall_tau(&out.rank, &truth).unwrap() < 1.0);
//! ```

pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod losses;
pub mod mle;
pub mod model;
pub mod partition;
pub mod pipeline;
pub mod rates;
pub mod spectral;

pub use error::{Error, Result};
pub use losses::{footrule, hamming_topk, kendall_tau};
pub use model::{
    default_l1, logit, make_regular_skills, sample_comparison_data, sigmoid, sigmoid_derivative,
    validate_parameter_space, ComparisonDataset, EdgeSummary, RankVector, SkillVector,
};
pub use partition::LeaguePartition;
pub use pipeline::{divide_and_conquer_rank, DacOptions, DacOutput, RelationMatrix};
