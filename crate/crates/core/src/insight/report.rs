//! Input loading and report assembly.
//!
//! [`AnalysisContext`] owns everything a run needs and exposes one method per
//! report fragment. The report and the HTTP service both go through these
//! methods, so a served fragment is always the same value the report holds.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::findings;
use super::{diversity_commonness_tradeoff, rank_queries, OutcomePredicate, QueryRanking, SynonymTable, Tradeoff};
use crate::config::{AnalysisParams, ProbabilityUnit, RecommendRequest, RunConfig};
use crate::dataset::{
    attach_features, load_dataset, AnnotatedDataset, Annotation, FeatureHeader, Gender, GenderLexicon,
    LoadOptions, Provenance,
};
use crate::error::{DatasetError, MetricError};
use crate::gender::{
    appearance_separability, contextual_representation, gender_inference_audit, gendered_distance_analysis,
    gendered_object_counts, ContextualRepresentation, DistanceAnalysis, GenderAuditResult, GenderSeparability,
    GenderedCounts,
};
use crate::geo::{
    country_distribution, local_tourist_separability, nonlocal_language_fraction, subregion_separability,
    tag_representation, visitor_dominated_countries, CountryDistribution, CountryTable, LanguageReport,
    LocalTouristSeparability, SubregionSeparability, TagReport, VisitorReport,
};
use crate::object::{
    appearance_diversity, category_counts, cooccurrence, detect_duplicate_pairs, duplicate_pair_stats,
    scale_distribution, scene_diversity, AppearanceDiversity, CategoryCounts, CooccurrenceMatrix, DuplicatePair,
    PairStat, ScaleDistribution, ScaleReport, SceneDiversityReport,
};

pub const SCHEMA_VERSION: &str = "1";
pub const TOOL_NAME: &str = "datasetlens";

/// Printed with every report that ranks queries.
pub const COOCCURRENCE_CAVEAT: &str = "Query probabilities are estimated from co-occurrence inside this dataset. \
They carry over to search results only if a search returns the paired objects at similar relative rates. \
No search is executed by this tool.";

/// Annotation kinds a dataset can carry, in report order.
pub const DATASET_ANNOTATIONS: [Annotation; 11] = [
    Annotation::InstanceLabels,
    Annotation::BoundingBoxes,
    Annotation::PersonInstances,
    Annotation::GenderLabels,
    Annotation::SceneGroups,
    Annotation::InstanceEmbeddings,
    Annotation::ImageEmbeddings,
    Annotation::FaceFlags,
    Annotation::CountryCodes,
    Annotation::Tags,
    Annotation::TagLanguages,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Object,
    Gender,
    Geo,
    Insight,
}

impl SectionKind {
    pub const ALL: [SectionKind; 4] = [SectionKind::Object, SectionKind::Gender, SectionKind::Geo, SectionKind::Insight];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionKind::Object => "object",
            SectionKind::Gender => "gender",
            SectionKind::Geo => "geo",
            SectionKind::Insight => "insight",
        }
    }
}

/// A report metric and the annotations it cannot run without.
#[derive(Clone, Copy, Debug)]
pub struct MetricSpec {
    pub id: &'static str,
    pub section: SectionKind,
    pub requires: &'static [Annotation],
}

use Annotation as A;

/// Every report metric in canonical order.
pub const METRICS: &[MetricSpec] = &[
    MetricSpec { id: "object_counts", section: SectionKind::Object, requires: &[A::InstanceLabels] },
    MetricSpec { id: "duplicate_annotations", section: SectionKind::Object, requires: &[A::InstanceLabels, A::BoundingBoxes] },
    MetricSpec { id: "object_scale", section: SectionKind::Object, requires: &[A::BoundingBoxes] },
    MetricSpec { id: "cooccurrence", section: SectionKind::Object, requires: &[A::InstanceLabels] },
    MetricSpec { id: "scene_diversity", section: SectionKind::Object, requires: &[A::InstanceLabels, A::SceneGroups] },
    MetricSpec { id: "appearance_diversity", section: SectionKind::Object, requires: &[A::InstanceLabels, A::InstanceEmbeddings] },
    MetricSpec { id: "contextual_representation", section: SectionKind::Gender, requires: &[A::GenderLabels] },
    MetricSpec { id: "gendered_counts", section: SectionKind::Gender, requires: &[A::GenderLabels, A::InstanceLabels] },
    MetricSpec { id: "person_object_distance", section: SectionKind::Gender, requires: &[A::BoundingBoxes, A::PersonInstances, A::GenderLabels] },
    MetricSpec { id: "gender_label_audit", section: SectionKind::Gender, requires: &[A::GenderLabels, A::PersonInstances] },
    MetricSpec { id: "appearance_separability", section: SectionKind::Gender, requires: &[A::GenderLabels, A::ImageEmbeddings] },
    MetricSpec { id: "country_distribution", section: SectionKind::Geo, requires: &[A::CountryCodes] },
    MetricSpec { id: "local_language", section: SectionKind::Geo, requires: &[A::CountryCodes, A::TagLanguages] },
    MetricSpec { id: "tag_representation", section: SectionKind::Geo, requires: &[A::CountryCodes, A::Tags] },
    MetricSpec { id: "subregion_separability", section: SectionKind::Geo, requires: &[A::CountryCodes, A::Tags, A::ImageEmbeddings] },
    MetricSpec { id: "local_tourist_separability", section: SectionKind::Geo, requires: &[A::CountryCodes, A::ImageEmbeddings] },
    MetricSpec { id: "query_recommendations", section: SectionKind::Insight, requires: &[A::InstanceLabels] },
    MetricSpec { id: "diversity_tradeoff", section: SectionKind::Insight, requires: &[A::InstanceLabels, A::SceneGroups, A::InstanceEmbeddings] },
];

pub fn metric_spec(id: &str) -> Option<&'static MetricSpec> {
    METRICS.iter().find(|m| m.id == id)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Computed,
    Skipped,
    Failed,
    Disabled,
}

/// A metric observation paired with a suggested dataset action.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub insight: String,
    pub action: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricEntry {
    pub id: &'static str,
    pub status: Status,
    pub missing: Vec<Annotation>,
    pub reason: Option<String>,
    pub result: Option<Value>,
    pub findings: Vec<Finding>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Section {
    pub status: Status,
    /// Union of the annotations that kept metrics from running.
    pub missing: Vec<Annotation>,
    pub metrics: Vec<MetricEntry>,
}

impl Section {
    pub fn metric(&self, id: &str) -> Option<&MetricEntry> {
        self.metrics.iter().find(|m| m.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sections {
    pub object: Section,
    pub gender: Section,
    pub geo: Section,
    pub insight: Section,
}

impl Sections {
    pub fn get(&self, kind: SectionKind) -> &Section {
        match kind {
            SectionKind::Object => &self.object,
            SectionKind::Gender => &self.gender,
            SectionKind::Geo => &self.geo,
            SectionKind::Insight => &self.insight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub provenance: Provenance,
    pub n_images: usize,
    pub n_instances: usize,
    pub n_categories: usize,
    pub n_supercategories: usize,
    /// Records dropped at load for reusing an ID.
    pub n_duplicate_records: usize,
    pub annotations: BTreeMap<&'static str, bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureInput {
    pub path: String,
    pub attached: bool,
    pub header: Option<FeatureHeader>,
    pub image_coverage: Option<f64>,
    pub instance_coverage: Option<f64>,
    pub missing_images: usize,
    pub missing_instances: usize,
    pub unknown_ids: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceInfo {
    pub source: String,
    pub entries: usize,
    pub population_year: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputSummary {
    pub features: Vec<FeatureInput>,
    pub country_table: ReferenceInfo,
    pub tag_vocabulary: Option<ReferenceInfo>,
    pub synonyms: ReferenceInfo,
    pub warnings: Vec<String>,
}

/// The machine-readable report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub schema_version: &'static str,
    pub tool: ToolInfo,
    pub generated_at: String,
    pub dataset: DatasetInfo,
    pub inputs: InputSummary,
    pub config: RunConfig,
    pub caveats: Vec<String>,
    pub sections: Sections,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn metric(&self, id: &str) -> Option<&MetricEntry> {
        let spec = metric_spec(id)?;
        self.sections.get(spec.section).metric(id)
    }
}

/// Flagged duplicate pairs and how many category pairs were examined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DuplicateSummary {
    pub pairs_examined: usize,
    pub flagged: Vec<DuplicatePair>,
}

/// Non-local tag languages and photographer classification by country.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalLanguage {
    pub nonlocal: LanguageReport,
    pub visitors: VisitorReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedItem {
    pub key: String,
    pub reason: String,
    pub missing: Vec<Annotation>,
}

/// Results of a metric run once per key (category, tag, target).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Keyed<T> {
    pub results: Vec<T>,
    pub skipped: Vec<SkippedItem>,
}

impl<T> Keyed<T> {
    fn collect(outcomes: Vec<(String, Result<T, MetricError>)>) -> Self {
        let mut results = Vec::new();
        let mut skipped = Vec::new();
        for (key, r) in outcomes {
            match r {
                Ok(v) => results.push(v),
                Err(e) => skipped.push(SkippedItem {
                    key,
                    missing: match &e {
                        MetricError::MissingAnnotations(m) => m.clone(),
                        _ => Vec::new(),
                    },
                    reason: e.to_string(),
                }),
            }
        }
        Self { results, skipped }
    }

    /// Every key failed for lack of annotations.
    fn all_missing(&self) -> Option<Vec<Annotation>> {
        if !self.results.is_empty() || self.skipped.is_empty() || self.skipped.iter().any(|s| s.missing.is_empty()) {
            return None;
        }
        let set: BTreeSet<Annotation> = self.skipped.iter().flat_map(|s| s.missing.iter().copied()).collect();
        Some(set.into_iter().collect())
    }
}

/// Everything a run needs, loaded once and shared read-only.
pub struct AnalysisContext {
    ds: AnnotatedDataset,
    config: RunConfig,
    countries: CountryTable,
    synonyms: SynonymTable,
    vocabulary: Option<Vec<String>>,
    inputs: InputSummary,
}

fn read_vocabulary(path: &Path) -> Result<Vec<String>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut words: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect();
    words.sort();
    words.dedup();
    Ok(words)
}

fn lexicon(config: &RunConfig) -> Result<GenderLexicon, DatasetError> {
    let default = GenderLexicon::default();
    match (&config.male_words, &config.female_words) {
        (None, None) => Ok(default),
        (male, female) => GenderLexicon::new(
            male.clone().unwrap_or_else(|| default.male_words().iter().cloned().collect()),
            female.clone().unwrap_or_else(|| default.female_words().iter().cloned().collect()),
        ),
    }
}

impl AnalysisContext {
    /// Reads the dataset, feature files and reference tables named by `config`.
    /// A feature file that does not exist is a warning; its metrics are skipped.
    pub fn load(config: RunConfig) -> Result<Self, DatasetError> {
        let path = config
            .dataset
            .clone()
            .ok_or_else(|| DatasetError::Config("no dataset path given".into()))?;
        let options = LoadOptions {
            lexicon: lexicon(&config)?,
            gender_label_map: config.gender_label_map.clone(),
            captions_path: config.captions.clone(),
            ..LoadOptions::default()
        };
        let mut ds = load_dataset(&path, config.format, &options)?;
        let mut features = Vec::new();
        let mut warnings = Vec::new();
        for fp in &config.features {
            if !fp.exists() {
                let msg = format!("feature file {} not found; feature-dependent metrics will be skipped", fp.display());
                log::warn!("{msg}");
                warnings.push(msg);
                features.push(FeatureInput {
                    path: fp.display().to_string(),
                    attached: false,
                    header: None,
                    image_coverage: None,
                    instance_coverage: None,
                    missing_images: 0,
                    missing_instances: 0,
                    unknown_ids: 0,
                });
                continue;
            }
            let (next, coverage) = attach_features(ds, fp)?;
            ds = next;
            features.push(FeatureInput {
                path: fp.display().to_string(),
                attached: true,
                header: ds.features().header.clone(),
                image_coverage: Some(coverage.image_coverage),
                instance_coverage: coverage.instance_coverage,
                missing_images: coverage.missing_images.len(),
                missing_instances: coverage.missing_instances.len(),
                unknown_ids: coverage.unknown_ids.len(),
            });
        }
        let countries = match &config.country_table {
            Some(p) => CountryTable::load(p)?,
            None => CountryTable::builtin().clone(),
        };
        let synonyms = match &config.synonyms {
            Some(p) => SynonymTable::load(p)?,
            None => SynonymTable::builtin().clone(),
        };
        let vocabulary = config.vocabulary.as_deref().map(read_vocabulary).transpose()?;
        let mut ctx = Self::assemble(ds, config, countries, synonyms, vocabulary);
        ctx.inputs.features = features;
        ctx.inputs.warnings = warnings;
        Ok(ctx)
    }

    /// Wraps an already built dataset with the bundled reference tables.
    pub fn from_dataset(ds: AnnotatedDataset, config: RunConfig) -> Self {
        Self::assemble(
            ds,
            config,
            CountryTable::builtin().clone(),
            SynonymTable::builtin().clone(),
            None,
        )
    }

    fn assemble(
        ds: AnnotatedDataset,
        config: RunConfig,
        countries: CountryTable,
        synonyms: SynonymTable,
        vocabulary: Option<Vec<String>>,
    ) -> Self {
        let inputs = InputSummary {
            features: Vec::new(),
            country_table: ReferenceInfo {
                source: countries.source.clone(),
                entries: countries.len(),
                population_year: countries.population_year,
            },
            tag_vocabulary: vocabulary.as_ref().map(|v| ReferenceInfo {
                source: config
                    .vocabulary
                    .as_ref()
                    .map_or_else(|| "supplied".into(), |p| p.display().to_string()),
                entries: v.len(),
                population_year: None,
            }),
            synonyms: ReferenceInfo {
                source: config
                    .synonyms
                    .as_ref()
                    .map_or_else(|| "builtin".into(), |p| p.display().to_string()),
                entries: synonyms.len(),
                population_year: None,
            },
            warnings: Vec::new(),
        };
        Self {
            ds,
            config,
            countries,
            synonyms,
            vocabulary,
            inputs,
        }
    }

    pub fn dataset(&self) -> &AnnotatedDataset {
        &self.ds
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn params(&self) -> &AnalysisParams {
        &self.config.params
    }

    pub fn country_table(&self) -> &CountryTable {
        &self.countries
    }

    pub fn inputs(&self) -> &InputSummary {
        &self.inputs
    }

    fn require(&self, needed: &[Annotation]) -> Result<(), MetricError> {
        let missing = self.ds.missing(needed);
        if missing.is_empty() {
            Ok(())
        } else {
            Err(MetricError::MissingAnnotations(missing))
        }
    }

    fn require_metric(&self, id: &str) -> Result<(), MetricError> {
        self.require(metric_spec(id).map_or(&[], |m| m.requires))
    }

    fn require_category(&self, category: &str) -> Result<(), MetricError> {
        if self.ds.categories().contains(category) {
            Ok(())
        } else {
            Err(MetricError::UnknownCategory(category.into()))
        }
    }

    pub fn object_counts(&self) -> Result<CategoryCounts, MetricError> {
        self.require_metric("object_counts")?;
        Ok(category_counts(&self.ds, &self.params().object))
    }

    pub fn duplicates(&self) -> Result<DuplicateSummary, MetricError> {
        self.require_metric("duplicate_annotations")?;
        let params = &self.params().object;
        Ok(DuplicateSummary {
            pairs_examined: duplicate_pair_stats(&self.ds, params).len(),
            flagged: detect_duplicate_pairs(&self.ds, params),
        })
    }

    pub fn scale(&self) -> Result<ScaleReport, MetricError> {
        scale_distribution(&self.ds, &self.params().object)
    }

    pub fn scale_for(&self, category: &str) -> Result<ScaleDistribution, MetricError> {
        self.require_category(category)?;
        self.scale()?
            .get(category)
            .cloned()
            .ok_or_else(|| MetricError::InsufficientSamples(format!("{category:?} has no boxed instances")))
    }

    pub fn cooccurrence(&self) -> Result<CooccurrenceMatrix, MetricError> {
        self.require_metric("cooccurrence")?;
        Ok(cooccurrence(&self.ds))
    }

    /// `b` may be a category, supercategory or scene group.
    pub fn cooccurrence_pair(&self, a: &str, b: &str) -> Result<PairStat, MetricError> {
        self.require_category(a)?;
        self.cooccurrence()?
            .lookup(a, b)
            .ok_or_else(|| MetricError::UnknownTerm(b.into()))
    }

    pub fn scene_diversity(&self) -> Result<SceneDiversityReport, MetricError> {
        scene_diversity(&self.ds, &self.params().object)
    }

    pub fn appearance_diversity(&self) -> Result<AppearanceDiversity, MetricError> {
        appearance_diversity(&self.ds, &self.params().object, self.params().seed)
    }

    pub fn gender_context(&self) -> Result<ContextualRepresentation, MetricError> {
        contextual_representation(&self.ds, &self.params().gender)
    }

    pub fn gender_counts(&self) -> Result<GenderedCounts, MetricError> {
        self.require_metric("gendered_counts")?;
        gendered_object_counts(&self.ds, &self.params().gender)
    }

    pub fn gender_distance(&self, category: &str) -> Result<DistanceAnalysis, MetricError> {
        gendered_distance_analysis(&self.ds, category, &self.params().gender)
    }

    pub fn gender_audit(&self) -> Result<GenderAuditResult, MetricError> {
        gender_inference_audit(&self.ds, &self.params().gender)
    }

    pub fn gender_separability(&self, category: &str) -> Result<GenderSeparability, MetricError> {
        appearance_separability(&self.ds, category, self.params())
    }

    /// Non-person categories by the number of gendered images containing them
    /// (and a person, when `with_person`), keeping those with at least `min`.
    fn gendered_categories(&self, with_person: bool, min: usize) -> Vec<String> {
        let explicit = &self.params().gender.categories;
        if !explicit.is_empty() {
            return explicit.clone();
        }
        let mut support: BTreeMap<&str, usize> = BTreeMap::new();
        for (pos, img) in self.ds.images().iter().enumerate() {
            if img.gender_label == Gender::Unknown {
                continue;
            }
            let insts: Vec<_> = self.ds.instances_of(pos).collect();
            if with_person && !insts.iter().any(|i| i.is_person) {
                continue;
            }
            let cats: BTreeSet<&str> = insts.iter().filter(|i| !i.is_person).map(|i| i.category.as_str()).collect();
            for c in cats {
                *support.entry(c).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = support.into_iter().filter(|(_, n)| *n >= min).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked
            .into_iter()
            .take(self.params().gender.max_auto_categories)
            .map(|(c, _)| c.to_string())
            .collect()
    }

    pub fn distance_categories(&self) -> Vec<String> {
        self.gendered_categories(true, self.params().gender.distance_min_n)
    }

    pub fn separability_categories(&self) -> Vec<String> {
        self.gendered_categories(false, self.params().gender.separability_min_n)
    }

    pub fn country_distribution(&self) -> Result<CountryDistribution, MetricError> {
        country_distribution(&self.ds, &self.countries)
    }

    pub fn local_language(&self) -> Result<LocalLanguage, MetricError> {
        let geo = &self.params().geo;
        Ok(LocalLanguage {
            nonlocal: nonlocal_language_fraction(&self.ds, &self.countries, geo)?,
            visitors: visitor_dominated_countries(&self.ds, &self.countries, geo)?,
        })
    }

    pub fn tags(&self) -> Result<TagReport, MetricError> {
        tag_representation(&self.ds, self.vocabulary.as_deref(), &self.params().geo)
    }

    /// Tag representation rows for one country.
    pub fn tags_for(&self, iso: &str) -> Result<TagReport, MetricError> {
        let known = self.countries.get(iso).is_some() || self.ds.images().iter().any(|i| i.country.as_deref() == Some(iso));
        if !known {
            return Err(MetricError::UnknownCountry(iso.into()));
        }
        let mut report = self.tags()?;
        report.rows.retain(|r| r.country == iso);
        report.over.retain(|r| r.country == iso);
        report.under.retain(|r| r.country == iso);
        Ok(report)
    }

    pub fn subregion(&self, tag: &str) -> Result<SubregionSeparability, MetricError> {
        subregion_separability(&self.ds, tag, &self.countries, self.params())
    }

    /// Explicit subregion tags, or the most frequent tags on geotagged images.
    pub fn subregion_tags(&self) -> Vec<String> {
        let geo = &self.params().geo;
        if !geo.subregion_tags.is_empty() {
            return geo.subregion_tags.clone();
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for img in self.ds.images().iter().filter(|i| i.country.is_some()) {
            let tags: BTreeSet<&str> = img.tags.iter().map(String::as_str).collect();
            for t in tags {
                *counts.entry(t).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(_, n)| *n >= geo.subregion_min_n).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.into_iter().take(geo.max_auto_tags).map(|(t, _)| t.to_string()).collect()
    }

    pub fn local_tourist(&self) -> Result<LocalTouristSeparability, MetricError> {
        local_tourist_separability(&self.ds, None, &self.countries, self.params())
    }

    /// Ranks queries for `target`, optionally overriding the support minimum
    /// and probability unit from the configuration.
    pub fn recommend(
        &self,
        target: &str,
        outcome: &str,
        min_support: Option<u64>,
        unit: Option<ProbabilityUnit>,
    ) -> Result<QueryRanking, MetricError> {
        let outcome: OutcomePredicate = outcome.parse()?;
        if min_support.is_none() && unit.is_none() {
            return rank_queries(&self.ds, target, &outcome, self.params(), &self.synonyms);
        }
        let mut params = self.params().clone();
        if let Some(s) = min_support {
            params.insight.min_support = s;
        }
        if let Some(u) = unit {
            params.insight.probability_unit = u;
        }
        rank_queries(&self.ds, target, &outcome, &params, &self.synonyms)
    }

    /// Explicit requests, or one per scale-skewed category asking for the
    /// size bins holding less than a uniform share.
    pub fn recommend_requests(&self) -> Vec<RecommendRequest> {
        let insight = &self.params().insight;
        if !insight.recommend.is_empty() {
            return insight.recommend.clone();
        }
        let Ok(scale) = self.scale() else {
            return Vec::new();
        };
        let uniform = 1.0 / scale.bin_labels.len() as f64;
        scale
            .skewed()
            .into_iter()
            .filter_map(|d| {
                let bins: Vec<&str> = d
                    .bin_shares
                    .iter()
                    .zip(&scale.bin_labels)
                    .filter(|(s, _)| **s < uniform)
                    .map(|(_, l)| l.as_str())
                    .collect();
                (!bins.is_empty()).then(|| RecommendRequest {
                    target: d.category.clone(),
                    outcome: format!("size:{}", bins.join(",")),
                })
            })
            .take(insight.max_auto_recommend)
            .collect()
    }

    pub fn tradeoff(&self, target: &str) -> Result<Tradeoff, MetricError> {
        diversity_commonness_tradeoff(&self.ds, target, self.params())
    }

    /// Explicit targets, or the categories with the most embedded instances.
    pub fn tradeoff_targets(&self) -> Vec<String> {
        let insight = &self.params().insight;
        if !insight.tradeoff_targets.is_empty() {
            return insight.tradeoff_targets.clone();
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for inst in self.ds.instances() {
            if self.ds.instance_embedding(inst).is_some() {
                *counts.entry(inst.category.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(_, n)| *n >= insight.tradeoff_min_instances)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked
            .into_iter()
            .take(insight.max_auto_tradeoff_targets)
            .map(|(c, _)| c.to_string())
            .collect()
    }

    fn dataset_info(&self) -> DatasetInfo {
        DatasetInfo {
            provenance: self.ds.provenance().clone(),
            n_images: self.ds.images().len(),
            n_instances: self.ds.instances().len(),
            n_categories: self.ds.categories().len(),
            n_supercategories: self.ds.categories().supercategories().len(),
            n_duplicate_records: self.ds.duplicates().len(),
            annotations: DATASET_ANNOTATIONS.iter().map(|a| (a.as_str(), self.ds.has(*a))).collect(),
        }
    }

    fn entry<T: Serialize>(
        &self,
        id: &'static str,
        compute: impl FnOnce() -> Result<T, MetricError>,
        describe: impl FnOnce(&T) -> Vec<Finding>,
    ) -> MetricEntry {
        let mut entry = MetricEntry {
            id,
            status: Status::Skipped,
            missing: Vec::new(),
            reason: None,
            result: None,
            findings: Vec::new(),
        };
        if let Err(MetricError::MissingAnnotations(m)) = self.require_metric(id) {
            entry.reason = Some(format!("missing annotations: {}", names(&m)));
            entry.missing = m;
            return entry;
        }
        match compute() {
            Ok(v) => {
                let mut f = describe(&v);
                f.truncate(self.params().insight.max_findings);
                entry.status = Status::Computed;
                entry.result = Some(serde_json::to_value(&v).expect("metric results serialize"));
                entry.findings = f;
            }
            Err(MetricError::MissingAnnotations(m)) => {
                entry.reason = Some(format!("missing annotations: {}", names(&m)));
                entry.missing = m;
            }
            Err(e @ (MetricError::InsufficientSamples(_) | MetricError::NoCandidates(_))) => {
                entry.reason = Some(e.to_string());
            }
            Err(e) => {
                log::warn!("{id} failed: {e}");
                entry.status = Status::Failed;
                entry.reason = Some(e.to_string());
            }
        }
        entry
    }

    fn keyed<T: Serialize + Send>(
        &self,
        id: &'static str,
        keys: Vec<String>,
        compute: impl Fn(&str) -> Result<T, MetricError> + Sync,
        describe: impl FnOnce(&[T]) -> Vec<Finding>,
    ) -> MetricEntry {
        self.entry(
            id,
            || {
                let outcomes: Vec<(String, Result<T, MetricError>)> = keys
                    .into_par_iter()
                    .map(|k| {
                        let r = compute(&k);
                        (k, r)
                    })
                    .collect();
                let keyed = Keyed::collect(outcomes);
                match keyed.all_missing() {
                    Some(m) => Err(MetricError::MissingAnnotations(m)),
                    None => Ok(keyed),
                }
            },
            |k: &Keyed<T>| describe(&k.results),
        )
    }

    fn object_section(&self) -> Vec<MetricEntry> {
        let p = self.params();
        vec![
            self.entry("object_counts", || self.object_counts(), findings::object_counts),
            self.entry("duplicate_annotations", || self.duplicates(), |r| findings::duplicates(r, p)),
            self.entry("object_scale", || self.scale(), findings::scale),
            self.entry("cooccurrence", || self.cooccurrence(), |r| findings::cooccurrence(&self.ds, r, p)),
            self.entry("scene_diversity", || self.scene_diversity(), findings::scene_diversity),
            self.entry("appearance_diversity", || self.appearance_diversity(), findings::appearance),
        ]
    }

    fn gender_section(&self) -> Vec<MetricEntry> {
        vec![
            self.entry("contextual_representation", || self.gender_context(), findings::gender_context),
            self.entry("gendered_counts", || self.gender_counts(), findings::gender_counts),
            self.keyed(
                "person_object_distance",
                self.distance_categories(),
                |c| self.gender_distance(c),
                findings::gender_distance,
            ),
            self.entry("gender_label_audit", || self.gender_audit(), findings::gender_audit),
            self.keyed(
                "appearance_separability",
                self.separability_categories(),
                |c| self.gender_separability(c),
                findings::gender_separability,
            ),
        ]
    }

    fn geo_section(&self) -> Vec<MetricEntry> {
        vec![
            self.entry("country_distribution", || self.country_distribution(), findings::countries),
            self.entry("local_language", || self.local_language(), |r| findings::local_language(r, &self.countries)),
            self.entry("tag_representation", || self.tags(), |r| findings::tags(r, &self.countries)),
            self.keyed("subregion_separability", self.subregion_tags(), |t| self.subregion(t), findings::subregions),
            self.entry("local_tourist_separability", || self.local_tourist(), findings::local_tourist),
        ]
    }

    fn insight_section(&self) -> Vec<MetricEntry> {
        let keys: Vec<String> = self
            .recommend_requests()
            .into_iter()
            .map(|r| format!("{}|{}", r.target, r.outcome))
            .collect();
        vec![
            self.keyed(
                "query_recommendations",
                keys,
                |k| {
                    let (target, outcome) = k.split_once('|').expect("request key");
                    self.recommend(target, outcome, None, None)
                        .map_err(|e| keyed_error(e, target, outcome))
                },
                findings::recommendations,
            ),
            self.keyed("diversity_tradeoff", self.tradeoff_targets(), |t| self.tradeoff(t), findings::tradeoffs),
        ]
    }

    fn section(&self, kind: SectionKind) -> Section {
        let enabled = match kind {
            SectionKind::Object => self.config.sections.object,
            SectionKind::Gender => self.config.sections.gender,
            SectionKind::Geo => self.config.sections.geo,
            SectionKind::Insight => self.config.sections.insight,
        };
        if !enabled {
            return Section {
                status: Status::Disabled,
                missing: Vec::new(),
                metrics: Vec::new(),
            };
        }
        let metrics = match kind {
            SectionKind::Object => self.object_section(),
            SectionKind::Gender => self.gender_section(),
            SectionKind::Geo => self.geo_section(),
            SectionKind::Insight => self.insight_section(),
        };
        let missing: BTreeSet<Annotation> = metrics.iter().flat_map(|m| m.missing.iter().copied()).collect();
        let status = if metrics.iter().any(|m| m.status == Status::Computed) {
            Status::Computed
        } else if metrics.iter().any(|m| m.status == Status::Failed) {
            Status::Failed
        } else {
            Status::Skipped
        };
        Section {
            status,
            missing: missing.into_iter().collect(),
            metrics,
        }
    }

    /// Runs every enabled section whose prerequisites are met. Sections are
    /// computed in parallel and merged in canonical order.
    pub fn generate_report(&self) -> Result<MetricReport, MetricError> {
        let mut sections: Vec<Section> = SectionKind::ALL.par_iter().map(|k| self.section(*k)).collect();
        if sections.iter().all(|s| s.status != Status::Computed) {
            return Err(MetricError::NothingComputable);
        }
        let insight = sections.pop().expect("four sections");
        let geo = sections.pop().expect("four sections");
        let gender = sections.pop().expect("four sections");
        let object = sections.pop().expect("four sections");
        let caveats = if insight.status == Status::Computed {
            vec![COOCCURRENCE_CAVEAT.to_string()]
        } else {
            Vec::new()
        };
        Ok(MetricReport {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo {
                name: TOOL_NAME,
                version: crate::TOOL_VERSION,
            },
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            dataset: self.dataset_info(),
            inputs: self.inputs.clone(),
            config: self.config.clone(),
            caveats,
            sections: Sections {
                object,
                gender,
                geo,
                insight,
            },
        })
    }
}

fn names(missing: &[Annotation]) -> String {
    missing.iter().map(|a| a.as_str()).collect::<Vec<_>>().join(", ")
}

fn keyed_error(e: MetricError, target: &str, outcome: &str) -> MetricError {
    match e {
        MetricError::NoCandidates(s) => {
            MetricError::InsufficientSamples(format!("{target} / {outcome}: no candidate meets the support threshold of {s}"))
        }
        other => other,
    }
}
