//! Gender-conditioned metrics. Gender is an image-level label derived from
//! captions; images whose label is unknown are left out everywhere.

mod audit;
mod context;
mod counts;
mod distance;
mod separability;
mod threshold;

pub use audit::{gender_inference_audit, identifiability, GenderAuditResult, Identifiability, SceneRatio};
pub use context::{contextual_representation, ContextCell, ContextualRepresentation};
pub use counts::{gendered_object_counts, GenderedCount, GenderedCounts};
pub use distance::{gendered_distance_analysis, person_object_distance, DistanceAnalysis, DistanceSample};
pub use separability::{appearance_separability, GenderSeparability};
pub use threshold::{cross_validated_mpca, fit_interaction_threshold, InteractionThreshold};

use crate::dataset::{AnnotatedDataset, Annotation, Gender};
use crate::error::MetricError;

/// Number of female and male images.
pub(crate) fn gender_totals(ds: &AnnotatedDataset) -> (u64, u64) {
    let mut f = 0;
    let mut m = 0;
    for img in ds.images() {
        match img.gender_label {
            Gender::Female => f += 1,
            Gender::Male => m += 1,
            Gender::Unknown => {}
        }
    }
    (f, m)
}

/// Errors unless both genders have at least one image.
pub(crate) fn require_both(ds: &AnnotatedDataset) -> Result<(u64, u64), MetricError> {
    let missing = ds.missing(&[Annotation::GenderLabels]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let (f, m) = gender_totals(ds);
    for (n, g) in [(f, Gender::Female), (m, Gender::Male)] {
        if n == 0 {
            return Err(MetricError::InsufficientSamples(format!("no {g} images")));
        }
    }
    Ok((f, m))
}
