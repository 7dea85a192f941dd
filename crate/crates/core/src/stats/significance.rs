use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::StatsError;

/// Exact rank-sum enumeration is used up to this many `n1 * n2` pairs.
const EXACT_LIMIT: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub test_name: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub n1: u64,
    pub n2: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// The first sample tends to be smaller.
    Less,
    /// The first sample tends to be larger.
    Greater,
}

fn normal_sf(z: f64) -> f64 {
    1.0 - Normal::standard().cdf(z)
}

/// Pooled two-sided z-test for equal proportions `k1/n1` and `k2/n2`.
/// The statistic is signed as `p1 - p2`.
pub fn two_proportion_test(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<TestResult, StatsError> {
    for (k, n) in [(k1, n1), (k2, n2)] {
        if n == 0 || k > n {
            return Err(StatsError::InvalidProportion {
                successes: k,
                trials: n,
            });
        }
    }
    let (a, b) = (n1 as f64, n2 as f64);
    let p1 = k1 as f64 / a;
    let p2 = k2 as f64 / b;
    let pooled = (k1 + k2) as f64 / (a + b);
    let se = (pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b)).sqrt();
    let (z, p) = if se > 0.0 {
        let z = (p1 - p2) / se;
        (z, (2.0 * normal_sf(z.abs())).min(1.0))
    } else {
        (0.0, 1.0)
    };
    Ok(TestResult {
        test_name: "two_proportion_z",
        statistic: z,
        p_value: p,
        n1,
        n2,
    })
}

/// Mann-Whitney U test. The statistic is `U` for `xs`. Exact when
/// `xs.len() * ys.len() <= 400` (ties handled through midranks), normal
/// approximation with tie and continuity corrections otherwise.
pub fn rank_sum_test(xs: &[f64], ys: &[f64], alternative: Alternative) -> Result<TestResult, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::Empty);
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n1 = xs.len();
    let n2 = ys.len();
    let n = n1 + n2;

    let mut pooled: Vec<(f64, bool)> = xs
        .iter()
        .map(|&v| (v, true))
        .chain(ys.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // doubled midranks keep everything integral
    let mut ranks2 = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let doubled = (i + 1 + j + 1) as u64;
        for r in &mut ranks2[i..=j] {
            *r = doubled;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w2: u64 = ranks2
        .iter()
        .zip(&pooled)
        .filter(|(_, (_, is_x))| *is_x)
        .map(|(r, _)| r)
        .sum();
    let base2 = (n1 * (n1 + 1)) as u64;
    let u = (w2 - base2) as f64 / 2.0;

    let p_value = if n1 * n2 <= EXACT_LIMIT {
        exact_p(&ranks2, n1, w2, alternative)
    } else {
        let mu = (n1 * n2) as f64 / 2.0;
        let nf = n as f64;
        let var = (n1 * n2) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let sd = var.sqrt();
            match alternative {
                Alternative::Less => normal_sf(-(u + 0.5 - mu) / sd),
                Alternative::Greater => normal_sf((u - 0.5 - mu) / sd),
                Alternative::TwoSided => {
                    let z = ((u - mu).abs() - 0.5).max(0.0) / sd;
                    (2.0 * normal_sf(z)).min(1.0)
                }
            }
        }
    };

    Ok(TestResult {
        test_name: "mann_whitney_u",
        statistic: u,
        p_value: p_value.clamp(0.0, 1.0),
        n1: n1 as u64,
        n2: n2 as u64,
    })
}

/// Exact null distribution of the doubled rank sum of an `n1`-subset.
fn exact_p(ranks2: &[u64], n1: usize, observed: u64, alternative: Alternative) -> f64 {
    let max_sum: u64 = ranks2.iter().sum();
    let width = max_sum as usize + 1;
    // ways[j][s]: subsets of size j with doubled rank sum s
    let mut ways = vec![vec![0u128; width]; n1 + 1];
    ways[0][0] = 1;
    for &r in ranks2 {
        let r = r as usize;
        for j in (1..=n1).rev() {
            let (lower, upper) = ways.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (r..width).rev() {
                if prev[s - r] != 0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let dist = &ways[n1];
    let total: u128 = dist.iter().sum();
    let obs = observed as usize;
    let le: u128 = dist[..=obs].iter().sum();
    let ge: u128 = dist[obs..].iter().sum();
    let p_le = le as f64 / total as f64;
    let p_ge = ge as f64 / total as f64;
    match alternative {
        Alternative::Less => p_le,
        Alternative::Greater => p_ge,
        Alternative::TwoSided => (2.0 * p_le.min(p_ge)).min(1.0),
    }
}

/// Benjamini-Hochberg adjusted p-values, in input order.
pub fn benjamini_hochberg(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &idx) in order.iter().enumerate().rev() {
        let q = p_values[idx] * m as f64 / (rank + 1) as f64;
        running = running.min(q);
        adjusted[idx] = running.min(1.0);
    }
    adjusted
}
