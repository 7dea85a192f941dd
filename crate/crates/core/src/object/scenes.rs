use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::ObjectParams;
use crate::dataset::{AnnotatedDataset, Annotation, SceneGroup};
use crate::error::MetricError;
use crate::stats::entropy;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SceneDiversity {
    pub category: String,
    /// Images of the category that carry a scene group.
    pub n_images: u64,
    pub n_instances: u64,
    /// Image counts per group, in group order.
    pub group_counts: Vec<u64>,
    /// Groups with at least one image.
    pub group_support: usize,
    pub entropy_bits: f64,
    pub normalized_entropy: f64,
    pub low_support: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SceneDiversityReport {
    pub groups: Vec<&'static str>,
    /// Ascending by entropy (least diverse first), then by name; low-support
    /// categories follow the ranked ones.
    pub categories: Vec<SceneDiversity>,
}

impl SceneDiversityReport {
    pub fn get(&self, category: &str) -> Option<&SceneDiversity> {
        self.categories.iter().find(|c| c.category == category)
    }
}

/// Entropy of the scene groups each category's images fall into.
pub fn scene_diversity(ds: &AnnotatedDataset, params: &ObjectParams) -> Result<SceneDiversityReport, MetricError> {
    let missing = ds.missing(&[Annotation::InstanceLabels, Annotation::SceneGroups]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    let mut instances: BTreeMap<&str, u64> = BTreeMap::new();
    for inst in ds.instances() {
        *instances.entry(inst.category.as_str()).or_default() += 1;
    }
    for (pos, image) in ds.images().iter().enumerate() {
        let Some(g) = image.scene_group else { continue };
        let mut cats: Vec<&str> = ds.instances_of(pos).map(|i| i.category.as_str()).collect();
        cats.sort_unstable();
        cats.dedup();
        for c in cats {
            counts.entry(c).or_insert_with(|| vec![0; SceneGroup::COUNT])[g.index()] += 1;
        }
    }
    if counts.is_empty() {
        return Err(MetricError::MissingAnnotations(vec![Annotation::SceneGroups]));
    }
    let mut categories: Vec<SceneDiversity> = counts
        .into_iter()
        .map(|(c, group_counts)| {
            let e = entropy(&group_counts).expect("category has at least one scene-grouped image");
            let n_instances = instances[c];
            SceneDiversity {
                category: c.to_string(),
                n_images: group_counts.iter().sum(),
                n_instances,
                group_support: group_counts.iter().filter(|&&n| n > 0).count(),
                group_counts,
                entropy_bits: e.bits,
                normalized_entropy: e.normalized,
                low_support: (n_instances as usize) < params.min_category_instances,
            }
        })
        .collect();
    categories.sort_by(|a, b| {
        a.low_support
            .cmp(&b.low_support)
            .then(a.entropy_bits.total_cmp(&b.entropy_bits))
            .then_with(|| a.category.cmp(&b.category))
    });
    Ok(SceneDiversityReport {
        groups: SceneGroup::ALL.iter().map(|g| g.id()).collect(),
        categories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoryTable, ImageRecord, InstanceRecord, Provenance};
    use proptest::prelude::*;

    fn build(rows: &[(&str, SceneGroup)]) -> AnnotatedDataset {
        let mut imgs = Vec::new();
        let mut insts = Vec::new();
        for (i, (c, g)) in rows.iter().enumerate() {
            let mut img = ImageRecord::new(format!("img{i:03}"), 10, 10);
            img.scene_group = Some(*g);
            imgs.push(img);
            insts.push(InstanceRecord::new(format!("i{i:03}"), format!("img{i:03}"), *c, None));
        }
        AnnotatedDataset::new(imgs, insts, CategoryTable::default(), Provenance::in_memory()).unwrap()
    }

    #[test]
    fn one_group_zero_four_groups_two_bits() {
        let mut rows = vec![("glove", SceneGroup::SportsFieldsParks); 8];
        for g in &SceneGroup::ALL[..4] {
            rows.push(("cup", *g));
            rows.push(("cup", *g));
        }
        let r = scene_diversity(&build(&rows), &ObjectParams::default()).unwrap();
        assert_eq!(r.get("glove").unwrap().entropy_bits, 0.0);
        assert_eq!(r.get("cup").unwrap().entropy_bits, 2.0);
        assert_eq!(r.categories[0].category, "glove");
    }

    proptest! {
        #[test]
        fn bounded_and_deleting_a_group_never_adds_support(
            rows in proptest::collection::vec((0usize..3, 0usize..16), 1..60),
            drop in 0usize..16,
        ) {
            let names = ["a", "b", "c"];
            let rows: Vec<(&str, SceneGroup)> = rows.iter().map(|(c, g)| (names[*c], SceneGroup::ALL[*g])).collect();
            let full = scene_diversity(&build(&rows), &ObjectParams::default()).unwrap();
            for c in &full.categories {
                prop_assert!(c.entropy_bits >= 0.0 && c.entropy_bits <= 4.0 + 1e-12);
            }
            let kept: Vec<(&str, SceneGroup)> = rows.iter().copied().filter(|(_, g)| g.index() != drop).collect();
            if kept.is_empty() {
                return Ok(());
            }
            let reduced = scene_diversity(&build(&kept), &ObjectParams::default()).unwrap();
            for c in &reduced.categories {
                prop_assert!(c.group_support <= full.get(&c.category).unwrap().group_support);
            }
        }
    }
}
