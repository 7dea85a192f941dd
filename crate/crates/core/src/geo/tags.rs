use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::config::GeoParams;
use crate::dataset::{AnnotatedDataset, Annotation};
use crate::error::MetricError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TagRepresentation {
    pub country: String,
    pub tag: String,
    pub in_count: u64,
    pub out_count: u64,
    pub in_share: f64,
    pub out_share: f64,
    /// `in_share / out_share`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TagReport {
    /// `supplied` or `observed`.
    pub vocabulary_source: &'static str,
    pub vocabulary_size: usize,
    pub min_count: u64,
    /// Every defined ratio, ordered by country then tag.
    pub rows: Vec<TagRepresentation>,
    /// Highest ratios among rows meeting `min_count`.
    pub over: Vec<TagRepresentation>,
    /// Lowest ratios among rows meeting `min_count`.
    pub under: Vec<TagRepresentation>,
}

impl TagReport {
    pub fn for_country(&self, iso: &str) -> Vec<&TagRepresentation> {
        self.rows.iter().filter(|r| r.country == iso).collect()
    }

    pub fn get(&self, iso: &str, tag: &str) -> Option<&TagRepresentation> {
        self.rows.iter().find(|r| r.country == iso && r.tag == tag)
    }
}

/// Share of each tag among a country's tag occurrences against its share in
/// all other countries. Tags are compared lowercase; without a vocabulary
/// every observed tag counts.
pub fn tag_representation(
    ds: &AnnotatedDataset,
    vocabulary: Option<&[String]>,
    params: &GeoParams,
) -> Result<TagReport, MetricError> {
    let missing = ds.missing(&[Annotation::CountryCodes, Annotation::Tags]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let vocab: Option<BTreeSet<String>> =
        vocabulary.map(|v| v.iter().map(|t| t.trim().to_lowercase()).filter(|t| !t.is_empty()).collect());
    let mut per_country: BTreeMap<&str, BTreeMap<String, u64>> = BTreeMap::new();
    let mut global: BTreeMap<String, u64> = BTreeMap::new();
    for img in ds.images() {
        let Some(iso) = img.country.as_deref() else { continue };
        for tag in &img.tags {
            let tag = tag.to_lowercase();
            if vocab.as_ref().is_some_and(|v| !v.contains(&tag)) {
                continue;
            }
            *per_country.entry(iso).or_default().entry(tag.clone()).or_default() += 1;
            *global.entry(tag).or_default() += 1;
        }
    }
    let total: u64 = global.values().sum();
    let mut rows = Vec::new();
    for (iso, tags) in &per_country {
        let in_total: u64 = tags.values().sum();
        let out_total = total - in_total;
        if out_total == 0 {
            continue;
        }
        for (tag, &n) in tags {
            let out = global[tag] - n;
            if out == 0 {
                continue;
            }
            let in_share = n as f64 / in_total as f64;
            let out_share = out as f64 / out_total as f64;
            rows.push(TagRepresentation {
                country: iso.to_string(),
                tag: tag.clone(),
                in_count: n,
                out_count: out,
                in_share,
                out_share,
                ratio: in_share / out_share,
            });
        }
    }
    let mut eligible: Vec<&TagRepresentation> = rows.iter().filter(|r| r.in_count >= params.tag_min_count).collect();
    let key = |a: &&TagRepresentation, b: &&TagRepresentation| {
        a.ratio
            .total_cmp(&b.ratio)
            .then_with(|| a.country.cmp(&b.country))
            .then_with(|| a.tag.cmp(&b.tag))
    };
    eligible.sort_by(key);
    let under = eligible.iter().take(params.tag_top_k).map(|r| (*r).clone()).collect();
    let over = eligible.iter().rev().take(params.tag_top_k).map(|r| (*r).clone()).collect();
    Ok(TagReport {
        vocabulary_source: if vocab.is_some() { "supplied" } else { "observed" },
        vocabulary_size: vocab.as_ref().map_or(global.len(), BTreeSet::len),
        min_count: params.tag_min_count,
        rows,
        over,
        under,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoryTable, ImageRecord, Provenance};
    use proptest::prelude::*;

    fn ds(rows: &[(&str, &[&str])]) -> AnnotatedDataset {
        let images = rows
            .iter()
            .enumerate()
            .map(|(i, (c, tags))| {
                let mut img = ImageRecord::new(format!("img{i:04}"), 10, 10);
                img.country = Some(c.to_string());
                img.tags = tags.iter().map(|t| t.to_string()).collect();
                img
            })
            .collect();
        AnnotatedDataset::new(images, vec![], CategoryTable::default(), Provenance::in_memory()).unwrap()
    }

    #[test]
    fn two_country_hand_computation() {
        // KI: wildlife 30, beach 10. US: wildlife 10, beach 90.
        let mut rows: Vec<(&str, &[&str])> = Vec::new();
        rows.extend(std::iter::repeat_n(("KI", &["wildlife"][..]), 30));
        rows.extend(std::iter::repeat_n(("KI", &["Beach"][..]), 10));
        rows.extend(std::iter::repeat_n(("US", &["wildlife"][..]), 10));
        rows.extend(std::iter::repeat_n(("US", &["beach"][..]), 90));
        let params = GeoParams { tag_min_count: 10, ..Default::default() };
        let r = tag_representation(&ds(&rows), None, &params).unwrap();
        let ki = r.get("KI", "wildlife").unwrap();
        assert!((ki.ratio - (30.0 / 40.0) / (10.0 / 100.0)).abs() < 1e-12);
        let us = r.get("US", "beach").unwrap();
        assert!((us.ratio - (90.0 / 100.0) / (10.0 / 40.0)).abs() < 1e-12);
        assert_eq!(r.over[0].tag, "wildlife");
        assert_eq!((r.under[0].country.as_str(), r.under[0].tag.as_str()), ("US", "wildlife"));
        assert_eq!(r.vocabulary_source, "observed");
    }

    #[test]
    fn vocabulary_filters_tags() {
        let r = tag_representation(
            &ds(&[("FR", &["cat", "dog"]), ("DE", &["cat", "dog"])]),
            Some(&["cat".to_string()]),
            &GeoParams::default(),
        )
        .unwrap();
        assert!(r.rows.iter().all(|row| row.tag == "cat"));
    }

    proptest! {
        #[test]
        fn single_tag_vocabulary_gives_unit_ratios(rows in proptest::collection::vec((0usize..4, 0usize..3), 1..50)) {
            let countries = ["FR", "DE", "US", "JP"];
            let tags = ["cat", "dog", "sea"];
            let raw: Vec<(&str, Vec<&str>)> = rows.iter().map(|(c, t)| (countries[*c], vec!["cat", tags[*t]])).collect();
            let refs: Vec<(&str, &[&str])> = raw.iter().map(|(c, t)| (*c, t.as_slice())).collect();
            let r = tag_representation(&ds(&refs), Some(&["cat".to_string()]), &GeoParams::default()).unwrap();
            for row in &r.rows {
                prop_assert!((row.ratio - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn removing_a_country_only_changes_the_denominator(rows in proptest::collection::vec((0usize..3, 0usize..3), 1..60)) {
            let countries = ["FR", "DE", "US"];
            let tags = ["cat", "dog", "sea"];
            let raw: Vec<(&str, [&str; 1])> = rows.iter().map(|(c, t)| (countries[*c], [tags[*t]])).collect();
            let all: Vec<(&str, &[&str])> = raw.iter().map(|(c, t)| (*c, &t[..])).collect();
            let kept: Vec<(&str, &[&str])> = all.iter().copied().filter(|(c, _)| *c != "US").collect();
            prop_assume!(!kept.is_empty());
            let full = tag_representation(&ds(&all), None, &GeoParams::default()).unwrap();
            let reduced = tag_representation(&ds(&kept), None, &GeoParams::default()).unwrap();
            prop_assert!(reduced.rows.iter().all(|r| r.country != "US"));
            // recompute the reduced ratios from the full table's counts
            for r in &reduced.rows {
                let f = full.get(&r.country, &r.tag).unwrap();
                prop_assert_eq!(r.in_count, f.in_count);
                let out_total: u64 = kept.iter().filter(|(c, _)| *c != r.country).count() as u64;
                let in_total: u64 = kept.iter().filter(|(c, _)| *c == r.country).count() as u64;
                let expected = (r.in_count as f64 / in_total as f64) / (r.out_count as f64 / out_total as f64);
                prop_assert!((r.ratio - expected).abs() < 1e-12);
            }
        }
    }
}
