//! Fixtures shared by the criterion benches.

use fullrank::{
    default_l1, make_regular_skills, sample_comparison_data, ComparisonDataset, RankVector,
};

/// Sampled dataset with identity truth and regular skills.
pub fn fixture(n: usize, p: f64, beta: f64, games: u32, seed: u64) -> ComparisonDataset {
    let skills = make_regular_skills(n, beta).expect("valid skills");
    sample_comparison_data(
        &skills,
        &RankVector::identity(n),
        p,
        games,
        default_l1(games, n),
        seed,
    )
    .expect("valid sampling parameters")
}

/// Deterministic permutation that reverses blocks of `block` players.
pub fn block_reversed(n: usize, block: usize) -> RankVector {
    let order: Vec<usize> = (0..n)
        .collect::<Vec<_>>()
        .chunks(block.max(1))
        .flat_map(|c| c.iter().rev().copied().collect::<Vec<_>>())
        .collect();
    RankVector::from_order(&order).expect("permutation")
}
