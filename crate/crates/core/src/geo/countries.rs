use std::collections::BTreeMap;

use serde::Serialize;

use super::CountryTable;
use crate::dataset::{AnnotatedDataset, Annotation};
use crate::error::MetricError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountryCount {
    pub iso: String,
    pub name: String,
    pub subregion: String,
    pub images: u64,
    pub population: u64,
    pub per_million: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountryDistribution {
    pub n_geotagged: u64,
    pub table_source: String,
    pub population_year: Option<u32>,
    /// Descending by image count, then by code.
    pub countries: Vec<CountryCount>,
    /// Codes absent from the table, with their image counts.
    pub unmatched: BTreeMap<String, u64>,
}

impl CountryDistribution {
    pub fn get(&self, iso: &str) -> Option<&CountryCount> {
        self.countries.iter().find(|c| c.iso == iso)
    }
}

/// Images per country, raw and per million inhabitants.
pub fn country_distribution(ds: &AnnotatedDataset, table: &CountryTable) -> Result<CountryDistribution, MetricError> {
    let missing = ds.missing(&[Annotation::CountryCodes]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for img in ds.images() {
        if let Some(c) = &img.country {
            *counts.entry(c.as_str()).or_default() += 1;
        }
    }
    let mut unmatched = BTreeMap::new();
    let mut countries = Vec::new();
    for (iso, n) in &counts {
        match table.get(iso) {
            Some(info) => countries.push(CountryCount {
                iso: info.iso.clone(),
                name: info.name.clone(),
                subregion: info.subregion.clone(),
                images: *n,
                population: info.population,
                per_million: *n as f64 * 1e6 / info.population as f64,
            }),
            None => {
                unmatched.insert(iso.to_string(), *n);
            }
        }
    }
    countries.sort_by(|a, b| b.images.cmp(&a.images).then_with(|| a.iso.cmp(&b.iso)));
    Ok(CountryDistribution {
        n_geotagged: counts.values().sum(),
        table_source: table.source.clone(),
        population_year: table.population_year,
        countries,
        unmatched,
    })
}
