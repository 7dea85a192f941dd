//! Statistical primitives shared by the metric modules.

mod entropy;
mod projection;
mod quantile;
mod seed;
mod separability;
mod significance;
mod svm;
mod wilson;

pub use entropy::{entropy, Entropy};
pub use projection::{default_projection_dim, random_projection, Projection};
pub use quantile::{fit_quantile_bins, QuantileBinning};
pub use seed::derive_seed;
pub use separability::{
    binary_separability, multiclass_separability, ClassSeparability, Exemplar, MulticlassSeparability,
    SeparabilityParams, SeparabilityResult,
};
pub use significance::{
    benjamini_hochberg, rank_sum_test, two_proportion_test, Alternative, TestResult,
};
pub use svm::{
    shuffled_baseline_ratio, stratified_split, train_linear_svm, train_one_vs_rest, BaselineResult,
    LinearModel, OneVsRestModel, SvmParams,
};
pub use wilson::{wilson_interval, wilson_lower};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
