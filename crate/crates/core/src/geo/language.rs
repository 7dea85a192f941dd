use std::collections::BTreeMap;

use serde::Serialize;

use super::{CountryInfo, CountryTable};
use crate::config::GeoParams;
use crate::dataset::{AnnotatedDataset, Annotation, ImageRecord};
use crate::error::MetricError;
use crate::stats::wilson_lower;

fn detected<'a>(image: &'a ImageRecord, params: &'a GeoParams) -> impl Iterator<Item = &'a str> + 'a {
    image
        .tag_languages
        .iter()
        .map(String::as_str)
        .filter(|l| !l.is_empty() && !params.undetermined_languages.iter().any(|u| u.eq_ignore_ascii_case(l)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountryLanguageStat {
    pub country: String,
    /// Images with at least one detected tag language.
    pub n_images: u64,
    pub n_nonlocal: u64,
    pub fraction: f64,
    pub wilson_lower_bound: f64,
    pub low_support: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LanguageReport {
    pub confidence: f64,
    /// Descending by lower bound, then by code.
    pub countries: Vec<CountryLanguageStat>,
    pub unmatched: Vec<String>,
}

impl LanguageReport {
    pub fn get(&self, iso: &str) -> Option<&CountryLanguageStat> {
        self.countries.iter().find(|c| c.country == iso)
    }
}

/// Non-local when some tag language is detected and none is official.
fn is_nonlocal(image: &ImageRecord, info: &CountryInfo, params: &GeoParams) -> Option<bool> {
    let mut any = false;
    for l in detected(image, params) {
        if info.is_official(l) {
            return Some(false);
        }
        any = true;
    }
    any.then_some(true)
}

pub fn nonlocal_language_fraction(
    ds: &AnnotatedDataset,
    table: &CountryTable,
    params: &GeoParams,
) -> Result<LanguageReport, MetricError> {
    let missing = ds.missing(&[Annotation::CountryCodes, Annotation::TagLanguages]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut unmatched = Vec::new();
    for img in ds.images() {
        let Some(iso) = img.country.as_deref() else { continue };
        let Some(info) = table.get(iso) else {
            unmatched.push(iso.to_string());
            continue;
        };
        if let Some(nonlocal) = is_nonlocal(img, info, params) {
            let e = counts.entry(iso).or_default();
            e.0 += 1;
            e.1 += u64::from(nonlocal);
        }
    }
    unmatched.sort();
    unmatched.dedup();
    let mut countries = counts
        .into_iter()
        .map(|(iso, (n, k))| {
            Ok(CountryLanguageStat {
                country: iso.to_string(),
                n_images: n,
                n_nonlocal: k,
                fraction: k as f64 / n as f64,
                wilson_lower_bound: wilson_lower(k, n, params.wilson_confidence)?,
                low_support: n < params.language_min_images,
            })
        })
        .collect::<Result<Vec<_>, MetricError>>()?;
    countries.sort_by(|a, b| {
        b.wilson_lower_bound
            .total_cmp(&a.wilson_lower_bound)
            .then_with(|| a.country.cmp(&b.country))
    });
    Ok(LanguageReport {
        confidence: params.wilson_confidence,
        countries,
        unmatched,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Photographer {
    Local,
    Tourist,
    Unknown,
}

/// Rules, first match wins:
/// 1. a detected tag language is official for the country: local;
/// 2. some language is detected but none is official: tourist;
/// 3. a tag is in the tourist lexicon: tourist;
/// 4. otherwise unknown.
pub fn classify_photographer(
    image: &ImageRecord,
    table: &CountryTable,
    params: &GeoParams,
) -> Result<Photographer, MetricError> {
    let iso = image
        .country
        .as_deref()
        .ok_or_else(|| MetricError::MissingCountry(image.image_id.clone()))?;
    let info = table.get(iso).ok_or_else(|| MetricError::UnknownCountry(iso.into()))?;
    match is_nonlocal(image, info, params) {
        Some(false) => return Ok(Photographer::Local),
        Some(true) => return Ok(Photographer::Tourist),
        None => {}
    }
    let tourist_tag = image
        .tags
        .iter()
        .any(|t| params.tourist_lexicon.iter().any(|w| w.eq_ignore_ascii_case(t)));
    Ok(if tourist_tag { Photographer::Tourist } else { Photographer::Unknown })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountryPhotographers {
    pub country: String,
    pub local: u64,
    pub tourist: u64,
    pub unknown: u64,
    pub supported: bool,
    pub visitor_dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitorReport {
    pub min_images: u64,
    pub countries: Vec<CountryPhotographers>,
    pub dominated: Vec<String>,
    pub n_supported: usize,
    /// Dominated share of supported countries.
    pub fraction: Option<f64>,
}

/// A country is visitor-dominated when it has at least `visitor_min_images`
/// classified images (unknown included) and strictly more tourist than local ones.
pub fn visitor_dominated_countries(
    ds: &AnnotatedDataset,
    table: &CountryTable,
    params: &GeoParams,
) -> Result<VisitorReport, MetricError> {
    let missing = ds.missing(&[Annotation::CountryCodes]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let mut counts: BTreeMap<&str, [u64; 3]> = BTreeMap::new();
    for img in ds.images() {
        let Some(iso) = img.country.as_deref() else { continue };
        let Ok(p) = classify_photographer(img, table, params) else { continue };
        counts.entry(iso).or_default()[p as usize] += 1;
    }
    let countries: Vec<CountryPhotographers> = counts
        .into_iter()
        .map(|(iso, [local, tourist, unknown])| {
            let supported = local + tourist + unknown >= params.visitor_min_images;
            CountryPhotographers {
                country: iso.to_string(),
                local,
                tourist,
                unknown,
                supported,
                visitor_dominated: supported && tourist > local,
            }
        })
        .collect();
    let dominated: Vec<String> = countries
        .iter()
        .filter(|c| c.visitor_dominated)
        .map(|c| c.country.clone())
        .collect();
    let n_supported = countries.iter().filter(|c| c.supported).count();
    Ok(VisitorReport {
        min_images: params.visitor_min_images,
        fraction: (n_supported > 0).then(|| dominated.len() as f64 / n_supported as f64),
        countries,
        dominated,
        n_supported,
    })
}
