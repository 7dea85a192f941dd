//! Pegasos linear SVM on standardized features.
//!
//! The bias is learned as the weight of a constant feature appended to every
//! sample, so it is regularized along with the other weights. After each epoch
//! the objective is measured on the training set; an epoch that would raise it
//! is rolled back, which keeps the recorded objective trace non-increasing.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seed::derive_seed;
use crate::error::StatsError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 100,
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl SvmParams {
    fn check(&self) -> Result<(), StatsError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(StatsError::InvalidParameter(format!("lambda = {}", self.lambda)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(StatsError::InvalidParameter(format!(
                "train_fraction = {}",
                self.train_fraction
            )));
        }
        if self.epochs == 0 {
            return Err(StatsError::InvalidParameter("epochs = 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[&[f64]]) -> Self {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m).powi(2) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    /// Standardized copy with the constant bias feature appended.
    fn augment(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = x
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect();
        out.push(1.0);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearModel {
    /// Weights over standardized features.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub train_accuracy: f64,
    pub heldout_accuracy: f64,
    /// Training objective after each epoch.
    pub objective_trace: Vec<f64>,
    #[serde(skip)]
    standardizer: Standardizer,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        let z = self.standardizer.augment(x);
        dot(&self.weights, &z[..z.len() - 1]) + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_rows<R: AsRef<[f64]>>(x: &[R], n_labels: usize) -> Result<usize, StatsError> {
    if x.len() != n_labels {
        return Err(StatsError::LengthMismatch {
            features: x.len(),
            labels: n_labels,
        });
    }
    if x.len() < 4 {
        return Err(StatsError::TooFewSamples {
            needed: 4,
            found: x.len(),
        });
    }
    let d = x[0].as_ref().len();
    if d == 0 || x.iter().any(|r| r.as_ref().len() != d) {
        return Err(StatsError::RaggedInput);
    }
    if x.iter().flat_map(|r| r.as_ref()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(d)
}

/// Stratified split of sample indices by class label. Every class with two or
/// more members keeps at least one sample on each side. Both index lists are
/// returned in ascending order.
pub fn stratified_split(labels: &[usize], train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "split"));
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        members.shuffle(&mut rng);
        let k = members.len();
        let n_train = if k < 2 {
            k
        } else {
            ((train_fraction * k as f64).round() as usize).clamp(1, k - 1)
        };
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn objective(w: &[f64], xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * dot(w, x)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / xs.len() as f64
}

fn pegasos(xs: &[Vec<f64>], ys: &[f64], lambda: f64, epochs: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let d = xs[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; d];
    let mut best = objective(&w, xs, ys, lambda);
    let mut trace = Vec::with_capacity(epochs);
    let radius = 1.0 / lambda.sqrt();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t = 0u64;
    for _ in 0..epochs {
        let snapshot = w.clone();
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * dot(&w, &xs[i]);
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(&xs[i]) {
                    *wj += eta * ys[i] * xj;
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                for wj in w.iter_mut() {
                    *wj *= s;
                }
            }
        }
        let obj = objective(&w, xs, ys, lambda);
        if obj <= best {
            best = obj;
        } else {
            w = snapshot;
        }
        trace.push(best);
    }
    (w, trace)
}

fn fit_binary(
    x: &[&[f64]],
    y: &[bool],
    train: &[usize],
    test: &[usize],
    params: &SvmParams,
    seed: u64,
) -> LinearModel {
    let std = Standardizer::fit(&train.iter().map(|&i| x[i]).collect::<Vec<_>>());
    let xs: Vec<Vec<f64>> = train.iter().map(|&i| std.augment(x[i])).collect();
    let ys: Vec<f64> = train.iter().map(|&i| if y[i] { 1.0 } else { -1.0 }).collect();
    let (mut w, trace) = pegasos(&xs, &ys, params.lambda, params.epochs, seed);
    let bias = w.pop().unwrap_or(0.0);
    let mut model = LinearModel {
        weights: w,
        bias,
        lambda: params.lambda,
        epochs: params.epochs,
        seed: params.seed,
        train_fraction: params.train_fraction,
        n_train: train.len(),
        n_test: test.len(),
        train_accuracy: 0.0,
        heldout_accuracy: 0.0,
        objective_trace: trace,
        standardizer: std,
    };
    let acc = |idx: &[usize]| {
        if idx.is_empty() {
            return 0.0;
        }
        let hits = idx.iter().filter(|&&i| model.predict(x[i]) == y[i]).count();
        hits as f64 / idx.len() as f64
    };
    let (tr, te) = (acc(train), acc(test));
    model.train_accuracy = tr;
    model.heldout_accuracy = te;
    model
}

/// Trains on a stratified split of `(x, y)` and reports held-out accuracy.
pub fn train_linear_svm<R: AsRef<[f64]> + Sync>(
    x: &[R],
    y: &[bool],
    params: &SvmParams,
) -> Result<LinearModel, StatsError> {
    params.check()?;
    check_rows(x, y.len())?;
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(StatsError::SingleClass);
    }
    let rows: Vec<&[f64]> = x.iter().map(AsRef::as_ref).collect();
    let classes: Vec<usize> = y.iter().map(|&v| usize::from(v)).collect();
    let (train, test) = stratified_split(&classes, params.train_fraction, params.seed);
    Ok(fit_binary(&rows, y, &train, &test, params, derive_seed(params.seed, "pegasos")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineResult {
    pub model: LinearModel,
    pub true_accuracy: f64,
    pub shuffled_accuracies: Vec<f64>,
    pub shuffled_mean_accuracy: f64,
    /// `true_accuracy / shuffled_mean_accuracy`; absent when the shuffled mean is 0.
    pub ratio: Option<f64>,
}

fn shuffled_labels<T: Clone>(labels: &[T], seed: u64, trial: usize) -> Vec<T> {
    let mut out = labels.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("shuffle-{trial}")));
    out.shuffle(&mut rng);
    out
}

/// Accuracy with true labels against the mean over `trials` retrainings on
/// permuted labels. Trials run in parallel and are collected in trial order.
pub fn shuffled_baseline_ratio<R: AsRef<[f64]> + Sync>(
    x: &[R],
    y: &[bool],
    params: &SvmParams,
    trials: usize,
) -> Result<BaselineResult, StatsError> {
    if trials == 0 {
        return Err(StatsError::InvalidParameter("trials = 0".into()));
    }
    let model = train_linear_svm(x, y, params)?;
    let shuffled: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ys = shuffled_labels(y, params.seed, t);
            let p = SvmParams {
                seed: derive_seed(params.seed, &format!("trial-{t}")),
                ..params.clone()
            };
            train_linear_svm(x, &ys, &p).map(|m| m.heldout_accuracy)
        })
        .collect::<Result<_, _>>()?;
    let mean = shuffled.iter().sum::<f64>() / trials as f64;
    Ok(BaselineResult {
        true_accuracy: model.heldout_accuracy,
        ratio: (mean > 0.0).then(|| model.heldout_accuracy / mean),
        shuffled_mean_accuracy: mean,
        shuffled_accuracies: shuffled,
        model,
    })
}

/// One binary model per class; prediction is the arg-max decision value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneVsRestModel {
    pub n_classes: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    /// Held-out recall per class; `None` for classes absent from the test side.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub overall_accuracy: f64,
    /// `confusion[true][predicted]` over the held-out samples.
    pub confusion: Vec<Vec<u64>>,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(skip)]
    standardizer: Standardizer,
}

impl OneVsRestModel {
    pub fn decisions(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardizer.augment(x);
        let z = &z[..z.len() - 1];
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, z) + b)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let d = self.decisions(x);
        let mut best = 0;
        for (c, v) in d.iter().enumerate() {
            if *v > d[best] {
                best = c;
            }
        }
        best
    }
}

/// `labels` are class indices in `0..n_classes`; at least two classes must occur.
pub fn train_one_vs_rest<R: AsRef<[f64]> + Sync>(
    x: &[R],
    labels: &[usize],
    n_classes: usize,
    params: &SvmParams,
) -> Result<OneVsRestModel, StatsError> {
    params.check()?;
    check_rows(x, labels.len())?;
    if labels.iter().any(|&l| l >= n_classes) {
        return Err(StatsError::InvalidParameter("label out of range".into()));
    }
    let present = (0..n_classes).filter(|c| labels.contains(c)).count();
    if present < 2 {
        return Err(StatsError::SingleClass);
    }
    let rows: Vec<&[f64]> = x.iter().map(AsRef::as_ref).collect();
    let (train, test) = stratified_split(labels, params.train_fraction, params.seed);
    let std = Standardizer::fit(&train.iter().map(|&i| rows[i]).collect::<Vec<_>>());
    let xs: Vec<Vec<f64>> = train.iter().map(|&i| std.augment(rows[i])).collect();

    let fitted: Vec<(Vec<f64>, f64)> = (0..n_classes)
        .into_par_iter()
        .map(|c| {
            let ys: Vec<f64> = train
                .iter()
                .map(|&i| if labels[i] == c { 1.0 } else { -1.0 })
                .collect();
            let seed = derive_seed(params.seed, &format!("ovr-{c}"));
            let (mut w, _) = pegasos(&xs, &ys, params.lambda, params.epochs, seed);
            let b = w.pop().unwrap_or(0.0);
            (w, b)
        })
        .collect();
    let (weights, biases) = fitted.into_iter().unzip();
    let mut model = OneVsRestModel {
        n_classes,
        weights,
        biases,
        per_class_accuracy: vec![None; n_classes],
        overall_accuracy: 0.0,
        confusion: vec![vec![0; n_classes]; n_classes],
        n_train: train.len(),
        n_test: test.len(),
        standardizer: std,
    };
    for &i in &test {
        let p = model.predict(rows[i]);
        model.confusion[labels[i]][p] += 1;
    }
    let mut hits = 0;
    for c in 0..n_classes {
        let row_total: u64 = model.confusion[c].iter().sum();
        hits += model.confusion[c][c];
        if row_total > 0 {
            model.per_class_accuracy[c] = Some(model.confusion[c][c] as f64 / row_total as f64);
        }
    }
    model.overall_accuracy = if test.is_empty() {
        0.0
    } else {
        hits as f64 / test.len() as f64
    };
    Ok(model)
}

pub(crate) fn shuffled_ovr_accuracies<R: AsRef<[f64]> + Sync>(
    x: &[R],
    labels: &[usize],
    n_classes: usize,
    params: &SvmParams,
    trials: usize,
) -> Result<Vec<f64>, StatsError> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let ls = shuffled_labels(labels, params.seed, t);
            let p = SvmParams {
                seed: derive_seed(params.seed, &format!("trial-{t}")),
                ..params.clone()
            };
            train_one_vs_rest(x, &ls, n_classes, &p).map(|m| m.overall_accuracy)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, gap: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = i % 2 == 0;
            let c = if label { gap / 2.0 } else { -gap / 2.0 };
            x.push(vec![c + noise.sample(&mut rng), noise.sample(&mut rng)]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn one_dimensional_threshold() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 }]).collect();
        let y: Vec<bool> = (0..20).map(|i| i % 2 == 1).collect();
        let m = train_linear_svm(&x, &y, &SvmParams::default()).unwrap();
        assert_eq!(m.heldout_accuracy, 1.0);
        assert_eq!(m.train_accuracy, 1.0);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0]; 6];
        assert_eq!(
            train_linear_svm(&x, &[true; 6], &SvmParams::default()),
            Err(StatsError::SingleClass)
        );
    }

    #[test]
    fn objective_never_increases() {
        let (x, y) = blobs(120, 1.0, 3);
        let m = train_linear_svm(&x, &y, &SvmParams::default()).unwrap();
        assert!(m.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (x, y) = blobs(60, 2.0, 1);
        let p = SvmParams { seed: 11, ..SvmParams::default() };
        assert_eq!(train_linear_svm(&x, &y, &p).unwrap(), train_linear_svm(&x, &y, &p).unwrap());
    }

    #[test]
    fn separable_blobs_train_well() {
        let (x, y) = blobs(200, 4.0, 5);
        let r = shuffled_baseline_ratio(&x, &y, &SvmParams::default(), 5).unwrap();
        assert!(r.true_accuracy >= 0.95, "{}", r.true_accuracy);
        assert!(r.ratio.unwrap() >= 1.5);
    }

    #[test]
    fn identical_rows_give_ratio_near_one() {
        let x = vec![vec![1.0, 2.0]; 100];
        let y: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        let r = shuffled_baseline_ratio(&x, &y, &SvmParams::default(), 5).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() < 0.25, "{:?}", r.ratio);
    }

    #[test]
    fn split_is_stratified() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i < 30)).collect();
        let (train, test) = stratified_split(&labels, 0.7, 4);
        assert_eq!(train.len() + test.len(), 100);
        assert_eq!(train.iter().filter(|&&i| labels[i] == 1).count(), 21);
        assert_eq!(test.iter().filter(|&&i| labels[i] == 1).count(), 9);
    }

    #[test]
    fn one_vs_rest_on_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x = Vec::new();
        let mut labels = Vec::new();
        for i in 0..240 {
            let c = i % 4;
            let centre = [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0), (6.0, 6.0)][c];
            x.push(vec![centre.0 + rng.random_range(-1.0..1.0), centre.1 + rng.random_range(-1.0..1.0)]);
            labels.push(c);
        }
        let m = train_one_vs_rest(&x, &labels, 4, &SvmParams::default()).unwrap();
        assert!(m.overall_accuracy >= 0.9, "{}", m.overall_accuracy);
        assert_eq!(m.confusion.iter().flatten().sum::<u64>() as usize, m.n_test);
    }
}
