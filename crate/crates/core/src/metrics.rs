//! Partition agreement.

use std::collections::HashMap;
use std::hash::Hash;

fn comb2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index between two labellings of the same items.
///
/// Returns 1.0 for identical partitions (up to relabelling) and values near
/// zero for chance agreement. Degenerate inputs where both partitions are
/// trivial score 1.0.
///
/// # Panics
///
/// If the labellings differ in length.
pub fn adjusted_rand_index<A, B>(left: &[A], right: &[B]) -> f64
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    assert_eq!(left.len(), right.len(), "labellings must cover the same items");
    let n = left.len();
    if n < 2 {
        return 1.0;
    }
    let mut left_counts: HashMap<&A, usize> = HashMap::new();
    let mut right_counts: HashMap<&B, usize> = HashMap::new();
    let mut table: HashMap<(&A, &B), usize> = HashMap::new();
    for (a, b) in left.iter().zip(right) {
        *left_counts.entry(a).or_default() += 1;
        *right_counts.entry(b).or_default() += 1;
        *table.entry((a, b)).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| comb2(c)).sum();
    let sum_left: f64 = left_counts.values().map(|&c| comb2(c)).sum();
    let sum_right: f64 = right_counts.values().map(|&c| comb2(c)).sum();
    let expected = sum_left * sum_right / comb2(n);
    let max_index = 0.5 * (sum_left + sum_right);
    let denominator = max_index - expected;
    if denominator == 0.0 {
        1.0
    } else {
        (index - expected) / denominator
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_up_to_relabelling() {
        let a = [0, 0, 1, 1, 2, 2];
        let b = ["x", "x", "z", "z", "y", "y"];
        assert_eq!(adjusted_rand_index(&a, &b), 1.0);
    }

    #[test]
    fn known_value() {
        // sklearn: adjusted_rand_score([0,0,1,1],[0,0,1,2]) = 0.5714285714
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 2]);
        assert!((ari - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn disagreement_is_not_positive() {
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!(ari <= 0.0);
    }
}
