//! Distances between rank vectors.
//!
//! All losses are normalized by `n` (not by the number of pairs), so Kendall's
//! tau ranges over `[0, (n - 1) / 2]`.

use crate::error::{invalid, Error, Result};
use crate::model::RankVector;

fn check_lengths(a: &RankVector, b: &RankVector) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(invalid("rank vectors are empty"));
    }
    Ok(a.len())
}

/// Number of discordant pairs between two rank vectors, in `O(n log n)`.
///
/// Players are listed in the order given by `r_star`; the discordant pairs
/// are then exactly the inversions of the corresponding `r_hat` sequence.
pub fn discordant_pairs(r_hat: &RankVector, r_star: &RankVector) -> Result<u64> {
    check_lengths(r_hat, r_star)?;
    let mut seq: Vec<usize> = r_star
        .order()
        .into_iter()
        .map(|player| r_hat.rank_of(player))
        .collect();
    let mut scratch = vec![0usize; seq.len()];
    Ok(count_inversions(&mut seq, &mut scratch))
}

/// Merge sort that returns the number of inversions it removed.
fn count_inversions(v: &mut [usize], scratch: &mut [usize]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (left, right) = v.split_at_mut(mid);
        let (sl, sr) = scratch.split_at_mut(mid);
        count_inversions(left, sl) + count_inversions(right, sr)
    };
    let (mut a, mut b, mut k) = (0, mid, 0);
    while a < mid && b < n {
        if v[a] <= v[b] {
            scratch[k] = v[a];
            a += 1;
        } else {
            scratch[k] = v[b];
            inv += (mid - a) as u64;
            b += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - a].copy_from_slice(&v[a..mid]);
    k += mid - a;
    scratch[k..k + n - b].copy_from_slice(&v[b..n]);
    v.copy_from_slice(&scratch[..n]);
    inv
}

/// Kendall's tau distance: discordant pairs divided by `n`.
pub fn kendall_tau(r_hat: &RankVector, r_star: &RankVector) -> Result<f64> {
    let n = check_lengths(r_hat, r_star)?;
    Ok(discordant_pairs(r_hat, r_star)? as f64 / n as f64)
}

/// Spearman's footrule: `(1/n) sum_i |r_hat[i] - r_star[i]|`.
pub fn footrule(r_hat: &RankVector, r_star: &RankVector) -> Result<f64> {
    let n = check_lengths(r_hat, r_star)?;
    let total: usize = r_hat
        .as_slice()
        .iter()
        .zip(r_star.as_slice())
        .map(|(a, b)| a.abs_diff(*b))
        .sum();
    Ok(total as f64 / n as f64)
}

/// Normalized Hamming distance between the top-`k` sets.
pub fn hamming_topk(r_hat: &RankVector, r_star: &RankVector, k: usize) -> Result<f64> {
    let n = check_lengths(r_hat, r_star)?;
    if k == 0 || k >= n {
        return Err(invalid(format!("k must lie in [1, {}], got {k}", n - 1)));
    }
    let mismatched = r_hat
        .as_slice()
        .iter()
        .zip(r_star.as_slice())
        .filter(|(&a, &b)| (a <= k) != (b <= k))
        .count();
    Ok(mismatched as f64 / (2 * k) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rv(v: &[usize]) -> RankVector {
        RankVector::new(v.to_vec()).unwrap()
    }

    fn naive_discordant(a: &RankVector, b: &RankVector) -> u64 {
        let (a, b) = (a.as_slice(), b.as_slice());
        let mut count = 0;
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                if (a[i] < a[j]) != (b[i] < b[j]) {
                    count += 1;
                }
            }
        }
        count
    }

    fn perm_strategy(max_n: usize) -> impl Strategy<Value = (RankVector, RankVector)> {
        (2..=max_n).prop_flat_map(|n| {
            let base: Vec<usize> = (1..=n).collect();
            (Just(base.clone()).prop_shuffle(), Just(base).prop_shuffle())
                .prop_map(|(a, b)| (RankVector::new(a).unwrap(), RankVector::new(b).unwrap()))
        })
    }

    #[test]
    fn kendall_examples() {
        let id4 = RankVector::identity(4);
        assert_eq!(kendall_tau(&id4, &id4).unwrap(), 0.0);
        assert_eq!(kendall_tau(&rv(&[4, 3, 2, 1]), &id4).unwrap(), 1.5);
        assert_eq!(
            kendall_tau(&rv(&[2, 1, 3, 5, 4]), &RankVector::identity(5)).unwrap(),
            0.4
        );
    }

    #[test]
    fn footrule_examples() {
        let id3 = RankVector::identity(3);
        assert_eq!(footrule(&id3, &id3).unwrap(), 0.0);
        assert_eq!(footrule(&rv(&[2, 1, 3]), &id3).unwrap(), 2.0 / 3.0);
        assert_eq!(
            footrule(&rv(&[4, 3, 2, 1]), &RankVector::identity(4)).unwrap(),
            2.0
        );
    }

    #[test]
    fn hamming_examples() {
        let id4 = RankVector::identity(4);
        assert_eq!(hamming_topk(&id4, &id4, 2).unwrap(), 0.0);
        assert_eq!(hamming_topk(&rv(&[3, 4, 1, 2]), &id4, 2).unwrap(), 1.0);
        assert_eq!(hamming_topk(&rv(&[2, 1, 4, 3]), &id4, 2).unwrap(), 0.0);
        assert!(hamming_topk(&id4, &id4, 0).is_err());
        assert!(hamming_topk(&id4, &id4, 4).is_err());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let a = RankVector::identity(3);
        let b = RankVector::identity(4);
        assert!(kendall_tau(&a, &b).is_err());
        assert!(footrule(&a, &b).is_err());
    }

    proptest! {
        #[test]
        fn fast_kendall_matches_pair_scan((a, b) in perm_strategy(120)) {
            prop_assert_eq!(discordant_pairs(&a, &b).unwrap(), naive_discordant(&a, &b));
        }

        #[test]
        fn diaconis_graham_sandwich((a, b) in perm_strategy(80)) {
            let k = kendall_tau(&a, &b).unwrap();
            let f = footrule(&a, &b).unwrap();
            prop_assert!(f / 2.0 <= k && k <= f);
        }

        #[test]
        fn symmetric_and_zero_iff_equal((a, b) in perm_strategy(60)) {
            prop_assert_eq!(kendall_tau(&a, &b).unwrap(), kendall_tau(&b, &a).unwrap());
            prop_assert_eq!(footrule(&a, &b).unwrap(), footrule(&b, &a).unwrap());
            let k = kendall_tau(&a, &b).unwrap();
            prop_assert_eq!(k == 0.0, a == b);
            prop_assert_eq!(footrule(&a, &b).unwrap() == 0.0, a == b);
            // quantized in units of 1/n
            if k < 1.0 / a.len() as f64 {
                prop_assert_eq!(k, 0.0);
            }
        }
    }
}
