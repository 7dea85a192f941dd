use std::collections::BTreeMap;

use serde::Serialize;

use super::{classify_photographer, CountryTable, Photographer};
use crate::config::AnalysisParams;
use crate::dataset::{AnnotatedDataset, Annotation};
use crate::error::MetricError;
use crate::stats::{binary_separability, derive_seed, multiclass_separability, MulticlassSeparability, SeparabilityResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubregionCount {
    pub subregion: String,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubregionSeparability {
    pub tag: String,
    pub included: Vec<SubregionCount>,
    /// Subregions below the support minimum.
    pub excluded: Vec<SubregionCount>,
    pub result: MulticlassSeparability,
}

fn has_tag(tags: &[String], tag: &str) -> bool {
    tags.iter().any(|t| t.eq_ignore_ascii_case(tag))
}

/// One-vs-rest classification of the subregion an image carrying `tag` was
/// taken in, from its image embedding.
pub fn subregion_separability(
    ds: &AnnotatedDataset,
    tag: &str,
    table: &CountryTable,
    params: &AnalysisParams,
) -> Result<SubregionSeparability, MetricError> {
    let missing = ds.missing(&[Annotation::CountryCodes, Annotation::Tags, Annotation::ImageEmbeddings]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let mut groups: BTreeMap<&str, Vec<(&str, &[f64])>> = BTreeMap::new();
    for img in ds.images() {
        let Some(info) = img.country.as_deref().and_then(|c| table.get(c)) else { continue };
        let Some(v) = ds.image_embedding(img) else { continue };
        if has_tag(&img.tags, tag) {
            groups.entry(info.subregion.as_str()).or_default().push((&img.image_id, v));
        }
    }
    let (inc, exc): (Vec<_>, Vec<_>) = groups
        .into_iter()
        .partition(|(_, members)| members.len() >= params.geo.subregion_min_n);
    let count = |(s, m): &(&str, Vec<_>)| SubregionCount {
        subregion: s.to_string(),
        n: m.len(),
    };
    if inc.len() < 2 {
        return Err(MetricError::InsufficientSamples(format!(
            "tag {tag:?}: {} subregions with at least {} images, need 2",
            inc.len(),
            params.geo.subregion_min_n
        )));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, (_, members)) in inc.iter().enumerate() {
        for (id, v) in members {
            ids.push(id.to_string());
            rows.push(*v);
            labels.push(c);
        }
    }
    let names: Vec<String> = inc.iter().map(|(s, _)| s.to_string()).collect();
    let sep = params.separability(derive_seed(params.seed, &format!("subregion-{tag}")), params.geo.exemplars);
    Ok(SubregionSeparability {
        tag: tag.into(),
        included: inc.iter().map(count).collect(),
        excluded: exc.iter().map(count).collect(),
        result: multiclass_separability(&ids, &rows, &labels, &names, &sep)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalTouristSeparability {
    pub tag: Option<String>,
    pub n_local: usize,
    pub n_tourist: usize,
    /// Local is the positive class.
    pub result: SeparabilityResult,
}

/// Whether local and tourist photos differ in image embedding, optionally
/// restricted to images carrying `tag`. Reported without a verdict.
pub fn local_tourist_separability(
    ds: &AnnotatedDataset,
    tag: Option<&str>,
    table: &CountryTable,
    params: &AnalysisParams,
) -> Result<LocalTouristSeparability, MetricError> {
    let missing = ds.missing(&[Annotation::CountryCodes, Annotation::ImageEmbeddings]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for img in ds.images() {
        if tag.is_some_and(|t| !has_tag(&img.tags, t)) {
            continue;
        }
        let Some(v) = ds.image_embedding(img) else { continue };
        let label = match classify_photographer(img, table, &params.geo) {
            Ok(Photographer::Local) => true,
            Ok(Photographer::Tourist) => false,
            _ => continue,
        };
        ids.push(img.image_id.clone());
        rows.push(v);
        labels.push(label);
    }
    let n_local = labels.iter().filter(|&&l| l).count();
    let n_tourist = labels.len() - n_local;
    let min_n = params.geo.local_tourist_min_n;
    if n_local < min_n || n_tourist < min_n {
        return Err(MetricError::InsufficientSamples(format!(
            "{n_local} local and {n_tourist} tourist images with embeddings, need {min_n} each"
        )));
    }
    let sep = params.separability(derive_seed(params.seed, &format!("local-tourist-{}", tag.unwrap_or(""))), params.geo.exemplars);
    Ok(LocalTouristSeparability {
        tag: tag.map(str::to_string),
        n_local,
        n_tourist,
        result: binary_separability(&ids, &rows, &labels, &sep)?,
    })
}
