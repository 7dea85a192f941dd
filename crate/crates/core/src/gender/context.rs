use std::collections::BTreeSet;

use serde::Serialize;

use super::require_both;
use crate::config::GenderParams;
use crate::dataset::{AnnotatedDataset, Annotation, Gender, SceneGroup};
use crate::error::MetricError;
use crate::stats::{benjamini_hochberg, two_proportion_test};

/// One scene group or supercategory, compared across genders.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextCell {
    pub key: String,
    pub female_count: u64,
    pub female_fraction: f64,
    pub male_count: u64,
    pub male_fraction: f64,
    /// Signed as female minus male.
    pub statistic: f64,
    pub p_value: f64,
    /// Benjamini-Hochberg adjusted over every cell of the analysis.
    pub q_value: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextualRepresentation {
    pub n_female: u64,
    pub n_male: u64,
    pub n_female_with_scene: u64,
    pub n_male_with_scene: u64,
    /// Share of each gender's scene-grouped images per group; `None` without scene groups.
    pub scene_groups: Option<Vec<ContextCell>>,
    /// Share of each gender's images with at least one object of the supercategory.
    pub supercategories: Vec<ContextCell>,
    pub warnings: Vec<String>,
}

struct Raw {
    key: String,
    f: u64,
    nf: u64,
    m: u64,
    nm: u64,
}

pub fn contextual_representation(
    ds: &AnnotatedDataset,
    params: &GenderParams,
) -> Result<ContextualRepresentation, MetricError> {
    let (n_female, n_male) = require_both(ds)?;
    let mut warnings = Vec::new();

    let mut scene_f = [0u64; SceneGroup::COUNT];
    let mut scene_m = [0u64; SceneGroup::COUNT];
    let supers: Vec<&str> = ds.categories().supercategories();
    let mut super_f = vec![0u64; supers.len()];
    let mut super_m = vec![0u64; supers.len()];
    for (pos, img) in ds.images().iter().enumerate() {
        let (scenes, sups) = match img.gender_label {
            Gender::Female => (&mut scene_f, &mut super_f),
            Gender::Male => (&mut scene_m, &mut super_m),
            Gender::Unknown => continue,
        };
        if let Some(g) = img.scene_group {
            scenes[g.index()] += 1;
        }
        let present: BTreeSet<&str> = ds.instances_of(pos).map(|i| ds.supercategory_of(&i.category)).collect();
        for s in present {
            if let Ok(i) = supers.binary_search(&s) {
                sups[i] += 1;
            }
        }
    }
    let nfs: u64 = scene_f.iter().sum();
    let nms: u64 = scene_m.iter().sum();

    let mut raw = Vec::new();
    let with_scenes = ds.has(Annotation::SceneGroups);
    let scene_cells = if !with_scenes {
        0
    } else if nfs == 0 || nms == 0 {
        warnings.push("scene groups present but one gender has no scene-grouped images".into());
        0
    } else {
        for g in SceneGroup::ALL {
            raw.push(Raw { key: g.id().into(), f: scene_f[g.index()], nf: nfs, m: scene_m[g.index()], nm: nms });
        }
        SceneGroup::COUNT
    };
    for (i, s) in supers.iter().enumerate() {
        raw.push(Raw { key: s.to_string(), f: super_f[i], nf: n_female, m: super_m[i], nm: n_male });
    }

    let tests = raw
        .iter()
        .map(|r| two_proportion_test(r.f, r.nf, r.m, r.nm))
        .collect::<Result<Vec<_>, _>>()?;
    let q = benjamini_hochberg(&tests.iter().map(|t| t.p_value).collect::<Vec<_>>());
    let mut cells: Vec<ContextCell> = raw
        .into_iter()
        .zip(tests)
        .zip(q)
        .map(|((r, t), q)| ContextCell {
            key: r.key,
            female_count: r.f,
            female_fraction: r.f as f64 / r.nf as f64,
            male_count: r.m,
            male_fraction: r.m as f64 / r.nm as f64,
            statistic: t.statistic,
            p_value: t.p_value,
            q_value: q,
            significant: q < params.fdr_alpha,
        })
        .collect();
    let supercategories = cells.split_off(scene_cells);
    Ok(ContextualRepresentation {
        n_female,
        n_male,
        n_female_with_scene: nfs,
        n_male_with_scene: nms,
        scene_groups: (scene_cells > 0).then_some(cells),
        supercategories,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoryTable, ImageRecord, InstanceRecord, Provenance};
    use proptest::prelude::*;

    fn build(rows: &[(Gender, Option<SceneGroup>, &str)]) -> AnnotatedDataset {
        let mut images = Vec::new();
        let mut instances = Vec::new();
        for (i, (g, s, c)) in rows.iter().enumerate() {
            let mut img = ImageRecord::new(format!("img{i:03}"), 10, 10);
            img.gender_label = *g;
            img.scene_group = *s;
            images.push(img);
            instances.push(InstanceRecord::new(format!("p{i:03}"), format!("img{i:03}"), "person", None));
            instances.push(InstanceRecord::new(format!("o{i:03}"), format!("img{i:03}"), *c, None));
        }
        let mut table = CategoryTable::default();
        table.insert("pizza", "food");
        table.insert("ball", "sports");
        table.insert("person", "person");
        AnnotatedDataset::new(images, instances, table, Provenance::in_memory()).unwrap()
    }

    #[test]
    fn all_female_images_in_one_group() {
        let mut rows = vec![(Gender::Female, Some(SceneGroup::ShoppingDining), "pizza"); 10];
        rows.extend([(Gender::Male, Some(SceneGroup::SportsFieldsParks), "ball"); 10]);
        let r = contextual_representation(&build(&rows), &GenderParams::default()).unwrap();
        let scenes = r.scene_groups.unwrap();
        let shop = scenes.iter().find(|c| c.key == SceneGroup::ShoppingDining.id()).unwrap();
        assert_eq!(shop.female_fraction, 1.0);
        assert_eq!(shop.male_fraction, 0.0);
        assert!(shop.significant);
        let food = r.supercategories.iter().find(|c| c.key == "food").unwrap();
        assert_eq!((food.female_count, food.male_count), (10, 0));
    }

    #[test]
    fn identical_distributions_have_no_significant_cell() {
        let mut rows = Vec::new();
        for g in [Gender::Female, Gender::Male] {
            for i in 0..20 {
                rows.push((g, Some(SceneGroup::ALL[i % 4]), if i % 2 == 0 { "pizza" } else { "ball" }));
            }
        }
        let r = contextual_representation(&build(&rows), &GenderParams::default()).unwrap();
        assert!(r.scene_groups.unwrap().iter().all(|c| !c.significant));
        assert!(r.supercategories.iter().all(|c| !c.significant));
    }

    #[test]
    fn missing_gender_is_an_error() {
        let rows = vec![(Gender::Female, None, "pizza"); 3];
        assert!(matches!(
            contextual_representation(&build(&rows), &GenderParams::default()),
            Err(MetricError::InsufficientSamples(_))
        ));
    }

    proptest! {
        #[test]
        fn scene_fractions_sum_to_one(rows in proptest::collection::vec((any::<bool>(), proptest::option::of(0usize..16)), 2..80)) {
            let mut rows: Vec<(Gender, Option<SceneGroup>, &str)> = rows
                .iter()
                .map(|(f, s)| (if *f { Gender::Female } else { Gender::Male }, s.map(|i| SceneGroup::ALL[i]), "pizza"))
                .collect();
            rows.push((Gender::Female, Some(SceneGroup::ALL[0]), "pizza"));
            rows.push((Gender::Male, Some(SceneGroup::ALL[1]), "pizza"));
            let r = contextual_representation(&build(&rows), &GenderParams::default()).unwrap();
            let cells = r.scene_groups.unwrap();
            let f: f64 = cells.iter().map(|c| c.female_fraction).sum();
            let m: f64 = cells.iter().map(|c| c.male_fraction).sum();
            prop_assert!((f - 1.0).abs() < 1e-9 && (m - 1.0).abs() < 1e-9);
        }
    }
}
