//! Projection plus linear classifier plus shuffled baseline, as one call.

use serde::{Deserialize, Serialize};

use super::projection::{default_projection_dim, Projection};
use super::seed::derive_seed;
use super::svm::{shuffled_baseline_ratio, shuffled_ovr_accuracies, train_one_vs_rest, SvmParams};
use crate::error::StatsError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeparabilityParams {
    pub svm: SvmParams,
    pub shuffle_trials: usize,
    /// Projection dimension; `floor(sqrt(n))` when unset.
    pub out_dim: Option<usize>,
    pub exemplars: usize,
}

impl Default for SeparabilityParams {
    fn default() -> Self {
        Self {
            svm: SvmParams::default(),
            shuffle_trials: 5,
            out_dim: None,
            exemplars: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exemplar {
    pub id: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparabilityResult {
    pub n_positive: usize,
    pub n_negative: usize,
    pub projected_dim: usize,
    pub accuracy: f64,
    pub shuffled_mean_accuracy: f64,
    pub shuffled_ratio: Option<f64>,
    /// Positive samples with the largest decision values, correctly classified.
    pub positive_exemplars: Vec<Exemplar>,
    /// Negative samples with the smallest decision values, correctly classified.
    pub negative_exemplars: Vec<Exemplar>,
}

fn project<R: AsRef<[f64]>>(
    rows: &[R],
    out_dim: Option<usize>,
    seed: u64,
) -> Result<Vec<Vec<f64>>, StatsError> {
    let d = rows.first().map_or(0, |r| r.as_ref().len());
    if d == 0 || rows.iter().any(|r| r.as_ref().len() != d) {
        return Err(StatsError::RaggedInput);
    }
    let k = out_dim.unwrap_or_else(|| default_projection_dim(rows.len())).min(d);
    let projection = if k == d && out_dim.is_none() {
        Projection::identity(d)
    } else {
        Projection::gaussian(d, k, derive_seed(seed, "projection"))?
    };
    projection.apply_all(rows)
}

fn top_exemplars(mut scored: Vec<(f64, &str)>, k: usize) -> Vec<Exemplar> {
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored
        .into_iter()
        .take(k)
        .map(|(score, id)| Exemplar {
            id: id.to_string(),
            score,
        })
        .collect()
}

/// Binary separability of `rows` under `labels`; `ids` name the rows for exemplars.
pub fn binary_separability<R: AsRef<[f64]>>(
    ids: &[String],
    rows: &[R],
    labels: &[bool],
    params: &SeparabilityParams,
) -> Result<SeparabilityResult, StatsError> {
    if ids.len() != rows.len() || rows.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            features: rows.len(),
            labels: labels.len(),
        });
    }
    let projected = project(rows, params.out_dim, params.svm.seed)?;
    let base = shuffled_baseline_ratio(&projected, labels, &params.svm, params.shuffle_trials)?;
    let model = &base.model;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for ((id, x), &label) in ids.iter().zip(&projected).zip(labels) {
        let s = model.decision(x);
        if label && s > 0.0 {
            pos.push((s, id.as_str()));
        } else if !label && s < 0.0 {
            neg.push((-s, id.as_str()));
        }
    }
    let mut negative_exemplars = top_exemplars(neg, params.exemplars);
    for e in &mut negative_exemplars {
        e.score = -e.score;
    }
    Ok(SeparabilityResult {
        n_positive: labels.iter().filter(|&&l| l).count(),
        n_negative: labels.iter().filter(|&&l| !l).count(),
        projected_dim: projected[0].len(),
        accuracy: base.true_accuracy,
        shuffled_mean_accuracy: base.shuffled_mean_accuracy,
        shuffled_ratio: base.ratio,
        positive_exemplars: top_exemplars(pos, params.exemplars),
        negative_exemplars,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassSeparability {
    pub class: String,
    pub n: usize,
    /// Held-out recall.
    pub accuracy: Option<f64>,
    pub exemplars: Vec<Exemplar>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MulticlassSeparability {
    pub projected_dim: usize,
    pub overall_accuracy: f64,
    pub chance_accuracy: f64,
    pub shuffled_mean_accuracy: f64,
    pub shuffled_ratio: Option<f64>,
    pub classes: Vec<ClassSeparability>,
    /// `confusion[true][predicted]` over held-out samples, rows in `classes` order.
    pub confusion: Vec<Vec<u64>>,
}

/// One-vs-rest separability. `labels` index into `class_names`.
pub fn multiclass_separability<R: AsRef<[f64]> + Sync>(
    ids: &[String],
    rows: &[R],
    labels: &[usize],
    class_names: &[String],
    params: &SeparabilityParams,
) -> Result<MulticlassSeparability, StatsError> {
    if ids.len() != rows.len() || rows.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            features: rows.len(),
            labels: labels.len(),
        });
    }
    let k = class_names.len();
    let projected = project(rows, params.out_dim, params.svm.seed)?;
    let model = train_one_vs_rest(&projected, labels, k, &params.svm)?;
    let shuffled = if params.shuffle_trials > 0 {
        shuffled_ovr_accuracies(&projected, labels, k, &params.svm, params.shuffle_trials)?
    } else {
        Vec::new()
    };
    let shuffled_mean = if shuffled.is_empty() {
        0.0
    } else {
        shuffled.iter().sum::<f64>() / shuffled.len() as f64
    };

    let mut per_class: Vec<Vec<(f64, &str)>> = vec![Vec::new(); k];
    for ((id, x), &label) in ids.iter().zip(&projected).zip(labels) {
        let d = model.decisions(x);
        let predicted = model.predict(x);
        if predicted == label {
            per_class[label].push((d[label], id.as_str()));
        }
    }
    let classes = class_names
        .iter()
        .enumerate()
        .map(|(c, name)| ClassSeparability {
            class: name.clone(),
            n: labels.iter().filter(|&&l| l == c).count(),
            accuracy: model.per_class_accuracy[c],
            exemplars: top_exemplars(std::mem::take(&mut per_class[c]), params.exemplars),
        })
        .collect();
    let present = (0..k).filter(|c| labels.contains(c)).count();
    Ok(MulticlassSeparability {
        projected_dim: projected[0].len(),
        overall_accuracy: model.overall_accuracy,
        chance_accuracy: 1.0 / present as f64,
        shuffled_mean_accuracy: shuffled_mean,
        shuffled_ratio: (shuffled_mean > 0.0).then(|| model.overall_accuracy / shuffled_mean),
        classes,
        confusion: model.confusion,
    })
}
