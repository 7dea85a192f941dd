use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::StatsError;

fn z_for(confidence: f64) -> Result<f64, StatsError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidConfidence(confidence));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// Wilson score interval `(lower, upper)` for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64), StatsError> {
    if trials == 0 || successes > trials {
        return Err(StatsError::InvalidProportion { successes, trials });
    }
    let z = z_for(confidence)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = ((centre - half) / denom).clamp(0.0, p);
    let upper = ((centre + half) / denom).clamp(p, 1.0);
    Ok((lower, upper))
}

pub fn wilson_lower(successes: u64, trials: u64, confidence: f64) -> Result<f64, StatsError> {
    wilson_interval(successes, trials, confidence).map(|(lo, _)| lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Closed form with z fixed at 1.96.
    fn closed_form(k: f64, n: f64) -> f64 {
        let z: f64 = 1.96;
        let p = k / n;
        (p + z * z / (2.0 * n) - z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt())
            / (1.0 + z * z / n)
    }

    #[test]
    fn reference_values() {
        assert_eq!(wilson_lower(0, 10, 0.95).unwrap(), 0.0);
        let all = wilson_lower(10, 10, 0.95).unwrap();
        assert!((all - closed_form(10.0, 10.0)).abs() < 1e-4);
        assert!((all - 0.7225).abs() < 1e-4);
        let half = wilson_lower(5, 10, 0.95).unwrap();
        assert!((half - 0.2366).abs() < 1e-4);
        assert!((wilson_lower(8, 10, 0.95).unwrap() - 0.4902).abs() < 1e-4);
    }

    #[test]
    fn zero_trials_is_error() {
        assert!(wilson_lower(0, 0, 0.95).is_err());
        assert!(wilson_lower(3, 2, 0.95).is_err());
        assert!(wilson_lower(1, 2, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn bound_below_mle_and_monotone(n in 1u64..500, k in 0u64..500) {
            let k = k.min(n);
            let lo = wilson_lower(k, n, 0.95).unwrap();
            prop_assert!(lo <= k as f64 / n as f64);
            prop_assert!(lo >= 0.0);
            if k < n {
                prop_assert!(wilson_lower(k + 1, n, 0.95).unwrap() >= lo);
            }
            prop_assert!(wilson_lower(n, n, 0.95).unwrap() < 1.0);
        }
    }
}
