use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::AnalysisParams;
use crate::dataset::{AnnotatedDataset, Annotation, Gender};
use crate::error::MetricError;
use crate::stats::{binary_separability, derive_seed, SeparabilityResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenderSeparability {
    pub category: String,
    pub female_available: usize,
    pub male_available: usize,
    /// Female is the positive class; both sides are subsampled to the smaller size.
    pub result: SeparabilityResult,
}

/// Whether a linear classifier can tell female from male images containing
/// `category` by their image embeddings.
pub fn appearance_separability(
    ds: &AnnotatedDataset,
    category: &str,
    params: &AnalysisParams,
) -> Result<GenderSeparability, MetricError> {
    if !ds.categories().contains(category) {
        return Err(MetricError::UnknownCategory(category.into()));
    }
    let missing = ds.missing(&[Annotation::GenderLabels, Annotation::ImageEmbeddings]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let mut female = Vec::new();
    let mut male = Vec::new();
    for (pos, img) in ds.images().iter().enumerate() {
        let Some(v) = ds.image_embedding(img) else { continue };
        if !ds.instances_of(pos).any(|i| i.category == category) {
            continue;
        }
        match img.gender_label {
            Gender::Female => female.push((img.image_id.as_str(), v)),
            Gender::Male => male.push((img.image_id.as_str(), v)),
            Gender::Unknown => {}
        }
    }
    let min_n = params.gender.separability_min_n;
    for (side, g) in [(&female, Gender::Female), (&male, Gender::Male)] {
        if side.len() < min_n {
            return Err(MetricError::InsufficientSamples(format!(
                "{category}: {} {g} images with embeddings, need {min_n}",
                side.len()
            )));
        }
    }
    let n = female.len().min(male.len());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &format!("gender-subsample-{category}")));
    let mut ids = Vec::with_capacity(2 * n);
    let mut rows = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(2 * n);
    for (side, label) in [(&female, true), (&male, false)] {
        let mut idx = sample(&mut rng, side.len(), n).into_vec();
        idx.sort_unstable();
        for i in idx {
            ids.push(side[i].0.to_string());
            rows.push(side[i].1);
            labels.push(label);
        }
    }
    let sep = params.separability(derive_seed(params.seed, &format!("gender-{category}")), params.gender.exemplars);
    Ok(GenderSeparability {
        category: category.into(),
        female_available: female.len(),
        male_available: male.len(),
        result: binary_separability(&ids, &rows, &labels, &sep)?,
    })
}
