use serde::Serialize;

use crate::error::StatsError;

/// `k` bins separated by `k - 1` strictly increasing edges. Bin `j` holds the
/// values in `(edges[j-1], edges[j]]`; a value equal to an edge goes to the lower bin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileBinning {
    pub k: usize,
    pub edges: Vec<f64>,
}

impl QuantileBinning {
    pub fn assign(&self, value: f64) -> usize {
        self.edges.partition_point(|&e| e < value)
    }

    /// Bin populations of `values`.
    pub fn populations(&self, values: &[f64]) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &v in values {
            out[self.assign(v)] += 1;
        }
        out
    }
}

/// Fits nearest-rank quantile edges: edge `i` is the sorted sample at rank
/// `ceil(i * m / k)`. When ties make an edge repeat, it moves up to the next
/// distinct value; if the sample runs out of distinct values the binning is
/// degenerate.
pub fn fit_quantile_bins(values: &[f64], k: usize) -> Result<QuantileBinning, StatsError> {
    if k < 2 {
        return Err(StatsError::TooFewBins(k));
    }
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let degenerate = StatsError::DegenerateEdges {
        distinct: distinct.len(),
        k,
    };
    if distinct.len() < k {
        return Err(degenerate);
    }

    let m = sorted.len();
    let mut edges: Vec<f64> = Vec::with_capacity(k - 1);
    for i in 1..k {
        let rank = (i * m).div_ceil(k);
        let mut edge = sorted[rank - 1];
        if let Some(&prev) = edges.last() {
            if edge <= prev {
                let next = distinct.partition_point(|&d| d <= prev);
                edge = *distinct.get(next).ok_or(degenerate.clone())?;
            }
        }
        edges.push(edge);
    }
    // the top bin must keep at least one value
    if edges.last().is_some_and(|&e| e >= sorted[m - 1]) {
        return Err(degenerate);
    }
    Ok(QuantileBinning { k, edges })
}
