use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::require_both;
use crate::config::GenderParams;
use crate::dataset::{AnnotatedDataset, Gender};
use crate::error::MetricError;
use crate::stats::{benjamini_hochberg, two_proportion_test};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenderedCount {
    pub category: String,
    /// Female-labeled images containing the category.
    pub female_images: u64,
    pub male_images: u64,
    pub female_rate: f64,
    pub male_rate: f64,
    /// `ln` of the smoothed female/male rate ratio; positive leans female.
    pub effect: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub q_value: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenderedCounts {
    pub n_female: u64,
    pub n_male: u64,
    /// Descending by `|effect|`, then by name.
    pub categories: Vec<GenderedCount>,
}

impl GenderedCounts {
    pub fn get(&self, category: &str) -> Option<&GenderedCount> {
        self.categories.iter().find(|c| c.category == category)
    }
}

/// Per-category image counts by gender with FDR-corrected two-proportion tests.
/// Person categories are skipped since every gendered image contains one.
pub fn gendered_object_counts(ds: &AnnotatedDataset, params: &GenderParams) -> Result<GenderedCounts, MetricError> {
    let (n_female, n_male) = require_both(ds)?;
    let person: BTreeSet<&str> = ds
        .instances()
        .iter()
        .filter(|i| i.is_person)
        .map(|i| i.category.as_str())
        .collect();
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for (pos, img) in ds.images().iter().enumerate() {
        if !img.gender_label.is_known() {
            continue;
        }
        let cats: BTreeSet<&str> = ds
            .instances_of(pos)
            .map(|i| i.category.as_str())
            .filter(|c| !person.contains(c))
            .collect();
        for c in cats {
            let e = counts.entry(c).or_default();
            if img.gender_label == Gender::Female {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    let tests = counts
        .values()
        .map(|&(f, m)| two_proportion_test(f, n_female, m, n_male))
        .collect::<Result<Vec<_>, _>>()?;
    let q = benjamini_hochberg(&tests.iter().map(|t| t.p_value).collect::<Vec<_>>());
    let (nf, nm) = (n_female as f64, n_male as f64);
    let mut categories: Vec<GenderedCount> = counts
        .into_iter()
        .zip(tests)
        .zip(q)
        .map(|(((c, (f, m)), t), q)| GenderedCount {
            category: c.to_string(),
            female_images: f,
            male_images: m,
            female_rate: f as f64 / nf,
            male_rate: m as f64 / nm,
            effect: ((f as f64 + 0.5) / (nf + 1.0)).ln() - ((m as f64 + 0.5) / (nm + 1.0)).ln(),
            statistic: t.statistic,
            p_value: t.p_value,
            q_value: q,
            significant: q < params.fdr_alpha,
        })
        .collect();
    categories.sort_by(|a, b| {
        b.effect
            .abs()
            .total_cmp(&a.effect.abs())
            .then_with(|| a.category.cmp(&b.category))
    });
    Ok(GenderedCounts {
        n_female,
        n_male,
        categories,
    })
}
