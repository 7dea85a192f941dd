use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::ObjectParams;
use crate::dataset::{AnnotatedDataset, Annotation, InstanceRecord};
use crate::error::MetricError;
use crate::stats::{fit_quantile_bins, QuantileBinning};

/// `XS, S, M, L, XL` for five bins, `B1..Bk` otherwise.
pub fn size_labels(k: usize) -> Vec<String> {
    if k == 5 {
        ["XS", "S", "M", "L", "XL"].map(String::from).to_vec()
    } else {
        (1..=k).map(|i| format!("B{i}")).collect()
    }
}

/// Clipped box area over image area; `None` without a box or when the box
/// lies entirely outside the image.
pub fn area_fraction(ds: &AnnotatedDataset, inst: &InstanceRecord) -> Option<f64> {
    let b = ds.clipped_bbox(inst).filter(|b| b.area() > 0.0)?;
    Some(b.area() / ds.image_of(inst).area())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleDistribution {
    pub category: String,
    pub n: usize,
    pub bin_counts: Vec<u64>,
    pub bin_shares: Vec<f64>,
    /// Fewer instances than the ranking minimum; never flagged as skewed.
    pub low_support: bool,
    pub skewed: bool,
    pub dominant_bin: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleReport {
    pub binning: QuantileBinning,
    pub bin_labels: Vec<String>,
    pub n_instances: usize,
    /// Population of each bin over all boxed instances.
    pub bin_populations: Vec<u64>,
    /// By category name.
    pub categories: Vec<ScaleDistribution>,
    pub warnings: Vec<String>,
}

impl ScaleReport {
    pub fn get(&self, category: &str) -> Option<&ScaleDistribution> {
        self.categories.iter().find(|c| c.category == category)
    }

    /// Bin index for an area fraction.
    pub fn bin_of(&self, fraction: f64) -> usize {
        self.binning.assign(fraction)
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.bin_labels.iter().position(|l| l.eq_ignore_ascii_case(label))
    }

    /// Categories flagged as skewed, most concentrated first.
    pub fn skewed(&self) -> Vec<&ScaleDistribution> {
        let mut out: Vec<&ScaleDistribution> = self.categories.iter().filter(|c| c.skewed).collect();
        out.sort_by(|a, b| {
            let ma = a.bin_shares.iter().copied().fold(0.0, f64::max);
            let mb = b.bin_shares.iter().copied().fold(0.0, f64::max);
            mb.total_cmp(&ma).then_with(|| a.category.cmp(&b.category))
        });
        out
    }
}

/// Quantizes every boxed instance's area fraction into dataset-wide quantile
/// bins and reports per-category shares.
pub fn scale_distribution(ds: &AnnotatedDataset, params: &ObjectParams) -> Result<ScaleReport, MetricError> {
    let missing = ds.missing(&[Annotation::BoundingBoxes]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let k = params.scale_bins;
    let fractions: Vec<(&str, f64)> = ds
        .instances()
        .iter()
        .filter_map(|i| area_fraction(ds, i).map(|f| (i.category.as_str(), f)))
        .collect();
    let values: Vec<f64> = fractions.iter().map(|(_, f)| *f).collect();
    let binning = fit_quantile_bins(&values, k)?;

    let mut per_cat: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    let mut populations = vec![0u64; k];
    for (c, f) in &fractions {
        let b = binning.assign(*f);
        per_cat.entry(c).or_insert_with(|| vec![0; k])[b] += 1;
        populations[b] += 1;
    }
    let labels = size_labels(k);
    let mut warnings = Vec::new();
    for c in ds.categories().categories() {
        if !per_cat.contains_key(c) {
            warnings.push(format!("category {c:?} has no boxed instances; omitted"));
        }
    }
    let categories = per_cat
        .into_iter()
        .map(|(c, counts)| {
            let n: u64 = counts.iter().sum();
            let shares: Vec<f64> = counts.iter().map(|&x| x as f64 / n as f64).collect();
            let mut dominant = 0;
            for (i, s) in shares.iter().enumerate() {
                if *s > shares[dominant] {
                    dominant = i;
                }
            }
            let low_support = (n as usize) < params.min_category_instances;
            ScaleDistribution {
                category: c.to_string(),
                n: n as usize,
                skewed: !low_support && shares[dominant] > params.scale_skew_share,
                dominant_bin: labels[dominant].clone(),
                bin_counts: counts,
                bin_shares: shares,
                low_support,
            }
        })
        .collect();
    Ok(ScaleReport {
        binning,
        bin_labels: labels,
        n_instances: values.len(),
        bin_populations: populations,
        categories,
        warnings,
    })
}
