use serde::Serialize;

use crate::error::StatsError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Entropy {
    /// Shannon entropy in bits.
    pub bits: f64,
    /// `bits / log2(groups)`; 0 when there is a single group.
    pub normalized: f64,
    pub groups: usize,
}

/// Entropy of the distribution proportional to `counts`. Every slot counts as a
/// possible group for normalization, zero or not.
pub fn entropy(counts: &[u64]) -> Result<Entropy, StatsError> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(StatsError::AllZero);
    }
    let total = total as f64;
    let bits = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0);
    let max_bits = (counts.len() as f64).log2();
    let normalized = if max_bits > 0.0 { bits / max_bits } else { 0.0 };
    Ok(Entropy {
        bits,
        normalized,
        groups: counts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct evaluation of -sum p log2 p over positive probabilities.
    fn oracle(ps: &[f64]) -> f64 {
        ps.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum()
    }

    #[test]
    fn uniform_sixteen_is_four_bits() {
        let e = entropy(&[7; 16]).unwrap();
        assert_eq!(e.bits, 4.0);
        assert_eq!(e.normalized, 1.0);
    }

    #[test]
    fn single_nonzero_is_zero() {
        assert_eq!(entropy(&[0, 5, 0]).unwrap().bits, 0.0);
    }

    #[test]
    fn three_to_one() {
        let expected = oracle(&[0.75, 0.25]);
        let got = entropy(&[3, 1]).unwrap().bits;
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.8113).abs() < 1e-4);
    }

    #[test]
    fn all_zero_is_error() {
        assert_eq!(entropy(&[0, 0]), Err(StatsError::AllZero));
        assert_eq!(entropy(&[]), Err(StatsError::AllZero));
    }

    proptest! {
        #[test]
        fn bounded_and_permutation_invariant(mut counts in proptest::collection::vec(0u64..50, 1..20)) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let e = entropy(&counts).unwrap();
            prop_assert!(e.bits >= 0.0);
            prop_assert!(e.bits <= (counts.len() as f64).log2() + 1e-12);
            counts.reverse();
            let r = entropy(&counts).unwrap();
            prop_assert!((e.bits - r.bits).abs() < 1e-12);
        }
    }
}
