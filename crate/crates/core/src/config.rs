//! Run configuration and every tunable threshold.
//!
//! Metric functions take their parameters from [`AnalysisParams`]; nothing
//! below this module carries its own defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetFormat, Gender};
use crate::stats::{SeparabilityParams, SvmParams};

/// How the duplicate-annotation fraction is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicateDenominator {
    /// Co-occurring images with at least one high-overlap match.
    #[default]
    Images,
    /// Matched instance pairs over the smaller instance count, summed over images.
    InstancePairs,
}

/// Per-instance contribution to a category's appearance diversity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionMode {
    /// Mean distance from the instance to the other samples.
    #[default]
    MeanDistance,
    /// Drop in the category score when the instance is left out.
    LeaveOneOut,
}

/// Unit over which a recommendation probability is estimated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityUnit {
    /// Images containing the target and the term; success when any target
    /// instance on the image satisfies the outcome.
    #[default]
    PerImage,
    /// Target instances on images containing the term.
    PerInstance,
}

/// Definition of a scene group's diversity gain in the tradeoff analysis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// Mean distance from the group's target instances to the overall centroid.
    #[default]
    CentroidDistance,
    /// Increase in total variance when the group is added back to the rest.
    LeaveGroupOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectParams {
    pub duplicate_iou: f64,
    pub duplicate_fraction: f64,
    pub duplicate_min_support: u64,
    pub duplicate_denominator: DuplicateDenominator,
    pub scale_bins: usize,
    /// A category is flagged when one bin holds more than this share.
    pub scale_skew_share: f64,
    /// Categories with fewer instances are left out of scale and diversity rankings.
    pub min_category_instances: usize,
    /// Over-represented when the count is at least this multiple of the supercategory mean.
    pub over_ratio: f64,
    /// Under-represented when the count is at most this multiple of the supercategory mean.
    pub under_ratio: f64,
    pub diversity_sample_cap: usize,
    pub diversity_contribution: ContributionMode,
    pub diversity_top_contributors: usize,
    /// Random instance pairs drawn for the same-class / same-supercategory /
    /// unrelated distance aggregates.
    pub diversity_validation_pairs: usize,
}

impl Default for ObjectParams {
    fn default() -> Self {
        Self {
            duplicate_iou: 0.95,
            duplicate_fraction: 0.6,
            duplicate_min_support: 5,
            duplicate_denominator: DuplicateDenominator::Images,
            scale_bins: 5,
            scale_skew_share: 0.4,
            min_category_instances: 20,
            over_ratio: 1.5,
            under_ratio: 0.5,
            diversity_sample_cap: 1000,
            diversity_contribution: ContributionMode::MeanDistance,
            diversity_top_contributors: 10,
            diversity_validation_pairs: 50_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenderParams {
    pub fdr_alpha: f64,
    pub distance_min_n: usize,
    pub identifiable_min_area: f64,
    pub separability_min_n: usize,
    pub exemplars: usize,
    /// Categories to run the distance and appearance analyses on; empty means
    /// every category that meets the sample minimums.
    pub categories: Vec<String>,
    /// Cap on categories analysed automatically, most frequent first.
    pub max_auto_categories: usize,
}

impl Default for GenderParams {
    fn default() -> Self {
        Self {
            fdr_alpha: 0.05,
            distance_min_n: 10,
            identifiable_min_area: 1000.0,
            separability_min_n: 25,
            exemplars: 5,
            categories: Vec::new(),
            max_auto_categories: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeoParams {
    pub wilson_confidence: f64,
    pub language_min_images: u64,
    pub visitor_min_images: u64,
    pub tag_min_count: u64,
    pub tag_top_k: usize,
    pub subregion_min_n: usize,
    pub tourist_lexicon: Vec<String>,
    /// Language codes that mean "not determined" and are ignored.
    pub undetermined_languages: Vec<String>,
    /// Tags to run subregion separability on; empty means the most frequent ones.
    pub subregion_tags: Vec<String>,
    pub max_auto_tags: usize,
    pub local_tourist_min_n: usize,
    pub exemplars: usize,
}

impl Default for GeoParams {
    fn default() -> Self {
        Self {
            wilson_confidence: 0.95,
            language_min_images: 10,
            visitor_min_images: 10,
            tag_min_count: 20,
            tag_top_k: 10,
            subregion_min_n: 10,
            tourist_lexicon: [
                "travel",
                "vacation",
                "holiday",
                "trip",
                "tourist",
                "tourism",
                "sightseeing",
                "traveling",
                "travelling",
            ]
            .map(String::from)
            .to_vec(),
            undetermined_languages: vec!["und".into()],
            subregion_tags: Vec::new(),
            max_auto_tags: 5,
            local_tourist_min_n: 25,
            exemplars: 5,
        }
    }
}

/// One recommendation request: target category and outcome predicate text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendRequest {
    pub target: String,
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InsightParams {
    pub min_support: u64,
    pub probability_unit: ProbabilityUnit,
    pub max_recommendations: usize,
    /// Explicit requests; when empty, one is derived for each scale-skewed category.
    pub recommend: Vec<RecommendRequest>,
    pub tradeoff_targets: Vec<String>,
    pub tradeoff_min_group_instances: usize,
    pub tradeoff_min_instances: usize,
    pub gain_mode: GainMode,
    /// Cap on tradeoff targets picked automatically, most embedded first.
    pub max_auto_tradeoff_targets: usize,
    /// Cap on recommendation requests derived from skewed scale distributions.
    pub max_auto_recommend: usize,
    /// Findings listed per metric in the report.
    pub max_findings: usize,
}

impl Default for InsightParams {
    fn default() -> Self {
        Self {
            min_support: 10,
            probability_unit: ProbabilityUnit::PerImage,
            max_recommendations: 10,
            recommend: Vec::new(),
            tradeoff_targets: Vec::new(),
            tradeoff_min_group_instances: 5,
            tradeoff_min_instances: 20,
            gain_mode: GainMode::CentroidDistance,
            max_auto_tradeoff_targets: 3,
            max_auto_recommend: 5,
            max_findings: 5,
        }
    }
}

/// All thresholds and the global seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisParams {
    pub seed: u64,
    pub object: ObjectParams,
    pub gender: GenderParams,
    pub geo: GeoParams,
    pub insight: InsightParams,
    pub svm: SvmParams,
    pub shuffle_trials: usize,
    /// Fixed projection dimension; `floor(sqrt(n))` when unset.
    pub projection_dim: Option<usize>,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            seed: 0,
            object: ObjectParams::default(),
            gender: GenderParams::default(),
            geo: GeoParams::default(),
            insight: InsightParams::default(),
            svm: SvmParams::default(),
            shuffle_trials: 5,
            projection_dim: None,
        }
    }
}

impl AnalysisParams {
    /// Separability settings with the SVM seed replaced by `seed`.
    pub fn separability(&self, seed: u64, exemplars: usize) -> SeparabilityParams {
        SeparabilityParams {
            svm: SvmParams {
                seed,
                ..self.svm.clone()
            },
            shuffle_trials: self.shuffle_trials,
            out_dim: self.projection_dim,
            exemplars,
        }
    }
}

/// Which report sections to attempt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SectionToggles {
    pub object: bool,
    pub gender: bool,
    pub geo: bool,
    pub insight: bool,
}

impl Default for SectionToggles {
    fn default() -> Self {
        Self {
            object: true,
            gender: true,
            geo: true,
            insight: true,
        }
    }
}

/// Everything needed to reproduce one analysis run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub format: DatasetFormat,
    pub captions: Option<PathBuf>,
    pub features: Vec<PathBuf>,
    pub country_table: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub gender_label_map: BTreeMap<String, Gender>,
    pub male_words: Option<Vec<String>>,
    pub female_words: Option<Vec<String>>,
    pub sections: SectionToggles,
    pub params: AnalysisParams,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            format: DatasetFormat::Canonical,
            captions: None,
            features: Vec::new(),
            country_table: None,
            vocabulary: None,
            synonyms: None,
            gender_label_map: BTreeMap::new(),
            male_words: None,
            female_words: None,
            sections: SectionToggles::default(),
            params: AnalysisParams::default(),
            out_dir: PathBuf::from("report"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"params":{"seed":9,"object":{"duplicate_iou":0.9}}}"#).unwrap();
        assert_eq!(cfg.params.seed, 9);
        assert_eq!(cfg.params.object.duplicate_iou, 0.9);
        assert_eq!(cfg.params.object.duplicate_fraction, 0.6);
        assert_eq!(cfg.params.svm.lambda, 1e-4);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
