use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::ObjectParams;
use crate::dataset::AnnotatedDataset;
use crate::stats::median;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationFlag {
    Over,
    Under,
    Typical,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryCount {
    pub category: String,
    pub supercategory: String,
    pub instances: u64,
    pub images: u64,
    /// Instance count over the mean of its supercategory's categories.
    pub ratio_to_supercategory_mean: f64,
    pub flag: RepresentationFlag,
    pub above_dataset_median: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupercategoryCount {
    pub supercategory: String,
    pub instances: u64,
    pub categories: usize,
    pub mean_per_category: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryCounts {
    /// Descending by instance count, then by name.
    pub categories: Vec<CategoryCount>,
    pub supercategories: Vec<SupercategoryCount>,
    pub dataset_median: f64,
    pub warnings: Vec<String>,
}

impl CategoryCounts {
    pub fn get(&self, category: &str) -> Option<&CategoryCount> {
        self.categories.iter().find(|c| c.category == category)
    }
}

/// Instance and image tallies per category, compared with the category's
/// supercategory mean and the dataset-wide median.
pub fn category_counts(ds: &AnnotatedDataset, params: &ObjectParams) -> CategoryCounts {
    let mut instances: BTreeMap<&str, u64> = ds.categories().categories().map(|c| (c, 0)).collect();
    let mut images: BTreeMap<&str, u64> = BTreeMap::new();
    for (pos, _) in ds.images().iter().enumerate() {
        let mut seen: Vec<&str> = ds.instances_of(pos).map(|i| i.category.as_str()).collect();
        seen.sort_unstable();
        seen.dedup();
        for c in seen {
            *images.entry(c).or_default() += 1;
        }
    }
    for inst in ds.instances() {
        *instances.entry(inst.category.as_str()).or_default() += 1;
    }

    let mut warnings = Vec::new();
    let mut supercategories = Vec::new();
    let mut sc_mean: BTreeMap<&str, f64> = BTreeMap::new();
    for sc in ds.categories().supercategories() {
        let members = ds.categories().members(sc);
        let total: u64 = members.iter().map(|c| instances[c]).sum();
        if total == 0 {
            warnings.push(format!("supercategory {sc:?} has no instances; omitted"));
            continue;
        }
        let mean = total as f64 / members.len() as f64;
        sc_mean.insert(sc, mean);
        supercategories.push(SupercategoryCount {
            supercategory: sc.to_string(),
            instances: total,
            categories: members.len(),
            mean_per_category: mean,
        });
    }

    let kept: Vec<(&str, u64)> = instances
        .iter()
        .filter(|(c, _)| sc_mean.contains_key(ds.supercategory_of(c)))
        .map(|(c, n)| (*c, *n))
        .collect();
    let counts: Vec<f64> = kept.iter().map(|(_, n)| *n as f64).collect();
    let dataset_median = if counts.is_empty() { 0.0 } else { median(&counts) };

    let mut categories: Vec<CategoryCount> = kept
        .into_iter()
        .map(|(c, n)| {
            let sc = ds.supercategory_of(c);
            let ratio = n as f64 / sc_mean[sc];
            let flag = if ratio >= params.over_ratio {
                RepresentationFlag::Over
            } else if ratio <= params.under_ratio {
                RepresentationFlag::Under
            } else {
                RepresentationFlag::Typical
            };
            CategoryCount {
                category: c.to_string(),
                supercategory: sc.to_string(),
                instances: n,
                images: images.get(c).copied().unwrap_or(0),
                ratio_to_supercategory_mean: ratio,
                flag,
                above_dataset_median: n as f64 > dataset_median,
            }
        })
        .collect();
    categories.sort_by(|a, b| b.instances.cmp(&a.instances).then_with(|| a.category.cmp(&b.category)));
    CategoryCounts {
        categories,
        supercategories,
        dataset_median,
        warnings,
    }
}
