use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ContributionMode, ObjectParams};
use crate::dataset::{AnnotatedDataset, Annotation};
use crate::error::MetricError;
use crate::stats::{derive_seed, euclidean, mean, std_dev};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contribution {
    pub instance_id: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiversityScore {
    pub category: String,
    pub supercategory: String,
    pub mean_pairwise_distance: f64,
    pub std_pairwise_distance: f64,
    /// Instances of the category with an embedding.
    pub n_embedded: usize,
    pub n_sampled: usize,
    pub low_support: bool,
    /// Highest-scoring instances, descending.
    pub top_contributors: Vec<Contribution>,
}

/// Distance statistics over random instance pairs of one relation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceAggregate {
    pub relation: &'static str,
    pub mean: f64,
    pub std: f64,
    pub n_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppearanceDiversity {
    pub contribution_mode: ContributionMode,
    pub sample_cap: usize,
    /// Ascending by mean distance (least diverse first); low-support
    /// categories follow the ranked ones.
    pub categories: Vec<DiversityScore>,
    pub same_class: Option<DistanceAggregate>,
    pub same_supercategory: Option<DistanceAggregate>,
    pub unrelated: Option<DistanceAggregate>,
    pub warnings: Vec<String>,
}

impl AppearanceDiversity {
    pub fn get(&self, category: &str) -> Option<&DiversityScore> {
        self.categories.iter().find(|c| c.category == category)
    }
}

/// Scores one set of samples. `None` with fewer than two rows.
pub fn category_diversity<R: AsRef<[f64]>>(
    category: &str,
    ids: &[String],
    rows: &[R],
    mode: ContributionMode,
    top: usize,
) -> Option<DiversityScore> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    let mut row_sums = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(rows[i].as_ref(), rows[j].as_ref());
            distances.push(d);
            row_sums[i] += d;
            row_sums[j] += d;
        }
    }
    let total: f64 = distances.iter().sum();
    let pairs = distances.len() as f64;
    let score = total / pairs;
    let contribution = |i: usize| match mode {
        ContributionMode::MeanDistance => row_sums[i] / (n - 1) as f64,
        ContributionMode::LeaveOneOut => {
            let rest_pairs = ((n - 1) * (n - 2) / 2) as f64;
            let without = if rest_pairs > 0.0 { (total - row_sums[i]) / rest_pairs } else { 0.0 };
            score - without
        }
    };
    let mut contributions: Vec<Contribution> = (0..n)
        .map(|i| Contribution {
            instance_id: ids[i].clone(),
            score: contribution(i),
        })
        .collect();
    contributions.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.instance_id.cmp(&b.instance_id)));
    contributions.truncate(top);
    Some(DiversityScore {
        category: category.to_string(),
        supercategory: String::new(),
        mean_pairwise_distance: score,
        std_pairwise_distance: std_dev(&distances),
        n_embedded: n,
        n_sampled: n,
        low_support: false,
        top_contributors: contributions,
    })
}

struct Embedded<'a> {
    id: &'a str,
    category: &'a str,
    supercategory: &'a str,
    v: &'a [f64],
}

fn aggregate(relation: &'static str, distances: &[f64]) -> Option<DistanceAggregate> {
    (!distances.is_empty()).then(|| DistanceAggregate {
        relation,
        mean: mean(distances),
        std: std_dev(distances),
        n_pairs: distances.len(),
    })
}

/// Draws `n_pairs` pairs of each relation. The first member is uniform over
/// embedded instances; the partner is uniform over the instances that stand in
/// the requested relation to it. Draws with no valid partner are skipped.
fn validation_aggregates(
    items: &[Embedded<'_>],
    n_pairs: usize,
    seed: u64,
) -> [Option<DistanceAggregate>; 3] {
    let mut by_category: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut by_super: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, it) in items.iter().enumerate() {
        by_category.entry(it.category).or_default().push(i);
        by_super.entry(it.supercategory).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "diversity-validation"));
    let mut out: [Vec<f64>; 3] = Default::default();
    if items.len() < 2 {
        return [None, None, None];
    }
    for (rel, dists) in out.iter_mut().enumerate() {
        for _ in 0..n_pairs {
            let a = &items[rng.random_range(0..items.len())];
            let pool: Vec<usize> = match rel {
                0 => by_category[a.category].iter().copied().filter(|&j| items[j].id != a.id).collect(),
                1 => by_super[a.supercategory]
                    .iter()
                    .copied()
                    .filter(|&j| items[j].category != a.category)
                    .collect(),
                _ => Vec::new(),
            };
            let b = if rel == 2 {
                let others = items.len() - by_super[a.supercategory].len();
                if others == 0 {
                    continue;
                }
                // rejection sampling keeps the partner uniform over other supercategories
                loop {
                    let j = rng.random_range(0..items.len());
                    if items[j].supercategory != a.supercategory {
                        break j;
                    }
                }
            } else {
                if pool.is_empty() {
                    continue;
                }
                pool[rng.random_range(0..pool.len())]
            };
            dists.push(euclidean(a.v, items[b].v));
        }
    }
    let [c, s, u] = out;
    [
        aggregate("same_class", &c),
        aggregate("same_supercategory", &s),
        aggregate("unrelated", &u),
    ]
}

/// Mean pairwise embedding distance per category, on at most
/// `diversity_sample_cap` instances drawn with a seed derived from the
/// category name.
pub fn appearance_diversity(
    ds: &AnnotatedDataset,
    params: &ObjectParams,
    seed: u64,
) -> Result<AppearanceDiversity, MetricError> {
    let missing = ds.missing(&[Annotation::InstanceLabels, Annotation::InstanceEmbeddings]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let items: Vec<Embedded<'_>> = ds
        .instances()
        .iter()
        .filter_map(|inst| {
            Some(Embedded {
                id: &inst.instance_id,
                category: &inst.category,
                supercategory: ds.supercategory_of(&inst.category),
                v: ds.instance_embedding(inst)?,
            })
        })
        .collect();
    let mut groups: BTreeMap<&str, Vec<&Embedded<'_>>> = BTreeMap::new();
    for it in &items {
        groups.entry(it.category).or_default().push(it);
    }

    let mut warnings = Vec::new();
    let scored: Vec<Option<DiversityScore>> = groups
        .par_iter()
        .map(|(category, members)| {
            let n = members.len();
            let chosen: Vec<&Embedded<'_>> = if n > params.diversity_sample_cap {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, category));
                let mut idx = sample(&mut rng, n, params.diversity_sample_cap).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(|i| members[i]).collect()
            } else {
                members.clone()
            };
            let ids: Vec<String> = chosen.iter().map(|e| e.id.to_string()).collect();
            let rows: Vec<&[f64]> = chosen.iter().map(|e| e.v).collect();
            let mut score = category_diversity(
                category,
                &ids,
                &rows,
                params.diversity_contribution,
                params.diversity_top_contributors,
            )?;
            score.supercategory = ds.supercategory_of(category).to_string();
            score.n_embedded = n;
            score.low_support = n < params.min_category_instances;
            Some(score)
        })
        .collect();
    let mut categories = Vec::new();
    for ((category, _), s) in groups.iter().zip(scored) {
        match s {
            Some(s) => categories.push(s),
            None => warnings.push(format!("{category}: fewer than two embedded instances; omitted")),
        }
    }
    if categories.is_empty() {
        return Err(MetricError::InsufficientSamples(
            "no category has two embedded instances".into(),
        ));
    }
    categories.sort_by(|a, b| {
        a.low_support
            .cmp(&b.low_support)
            .then(a.mean_pairwise_distance.total_cmp(&b.mean_pairwise_distance))
            .then_with(|| a.category.cmp(&b.category))
    });
    let [same_class, same_supercategory, unrelated] =
        validation_aggregates(&items, params.diversity_validation_pairs, seed);
    Ok(AppearanceDiversity {
        contribution_mode: params.diversity_contribution,
        sample_cap: params.diversity_sample_cap,
        categories,
        same_class,
        same_supercategory,
        unrelated,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        attach_feature_store, CategoryTable, FeatureStore, ImageRecord, InstanceRecord, Provenance,
        INSTANCE_DIM,
    };
    use rand_distr::{Distribution, Normal};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("i{i}")).collect()
    }

    #[test]
    fn identical_embeddings_score_zero() {
        let rows = vec![vec![1.0, 2.0]; 4];
        let s = category_diversity("c", &ids(4), &rows, ContributionMode::MeanDistance, 10).unwrap();
        assert_eq!(s.mean_pairwise_distance, 0.0);
    }

    #[test]
    fn two_points_at_distance_three() {
        let rows = vec![vec![0.0, 0.0], vec![3.0, 0.0]];
        let s = category_diversity("c", &ids(2), &rows, ContributionMode::MeanDistance, 10).unwrap();
        assert_eq!(s.mean_pairwise_distance, 3.0);
        assert!(category_diversity("c", &ids(1), &rows[..1], ContributionMode::MeanDistance, 10).is_none());
    }

    #[test]
    fn outlier_contributes_most_under_both_modes() {
        let rows = vec![vec![0.0], vec![0.1], vec![0.2], vec![5.0]];
        for mode in [ContributionMode::MeanDistance, ContributionMode::LeaveOneOut] {
            let s = category_diversity("c", &ids(4), &rows, mode, 2).unwrap();
            assert_eq!(s.top_contributors.len(), 2);
            assert_eq!(s.top_contributors[0].instance_id, "i3");
        }
    }

    #[test]
    fn leave_one_out_matches_recomputation() {
        let rows = vec![vec![0.0, 1.0], vec![2.0, 0.5], vec![1.0, 3.0], vec![4.0, 4.0]];
        let full = category_diversity("c", &ids(4), &rows, ContributionMode::LeaveOneOut, 4).unwrap();
        for c in &full.top_contributors {
            let i: usize = c.instance_id[1..].parse().unwrap();
            let rest: Vec<Vec<f64>> = rows.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r.clone()).collect();
            let without = category_diversity("c", &ids(3), &rest, ContributionMode::MeanDistance, 0).unwrap();
            assert!((c.score - (full.mean_pairwise_distance - without.mean_pairwise_distance)).abs() < 1e-12);
        }
    }

    /// Supercategory centres far apart, category centres nearer, instances
    /// tight around their category centre.
    fn nested(seed: u64, per_category: usize) -> AnnotatedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wide = Normal::new(0.0, 10.0).unwrap();
        let mid = Normal::new(0.0, 3.0).unwrap();
        let tight = Normal::new(0.0, 1.0).unwrap();
        let mut table = CategoryTable::default();
        let mut images = Vec::new();
        let mut instances = Vec::new();
        let mut store = FeatureStore::default();
        for s in 0..3 {
            let sc: Vec<f64> = (0..INSTANCE_DIM).map(|_| wide.sample(&mut rng)).collect();
            for c in 0..3 {
                let name = format!("s{s}c{c}");
                table.insert(name.clone(), format!("s{s}"));
                let cc: Vec<f64> = sc.iter().map(|x| x + mid.sample(&mut rng)).collect();
                for k in 0..per_category {
                    let img = format!("{name}-{k}");
                    images.push(ImageRecord::new(img.clone(), 10, 10));
                    instances.push(InstanceRecord::new(img.clone(), img.clone(), name.clone(), None));
                    store
                        .instance_features
                        .insert(img, cc.iter().map(|x| x + tight.sample(&mut rng)).collect());
                }
            }
        }
        let ds = AnnotatedDataset::new(images, instances, table, Provenance::in_memory()).unwrap();
        attach_feature_store(ds, store).unwrap().0
    }

    #[test]
    fn nested_clusters_order_the_validation_aggregates() {
        for seed in 0..5 {
            let params = ObjectParams {
                diversity_validation_pairs: 2000,
                ..Default::default()
            };
            let r = appearance_diversity(&nested(seed, 30), &params, seed).unwrap();
            let (c, s, u) = (r.same_class.unwrap(), r.same_supercategory.unwrap(), r.unrelated.unwrap());
            assert!(c.mean < s.mean && s.mean < u.mean, "seed {seed}: {} {} {}", c.mean, s.mean, u.mean);
            assert_eq!(r.categories.len(), 9);
        }
    }

    #[test]
    fn cap_sampling_is_seeded_and_low_support_ranks_last() {
        let params = ObjectParams {
            diversity_sample_cap: 12,
            min_category_instances: 10,
            diversity_validation_pairs: 100,
            ..Default::default()
        };
        let ds = nested(3, 20);
        let a = appearance_diversity(&ds, &params, 7).unwrap();
        let b = appearance_diversity(&ds, &params, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.categories.iter().all(|c| c.n_sampled == 12 && c.n_embedded == 20));
        let strict = ObjectParams { min_category_instances: 25, ..params };
        let r = appearance_diversity(&ds, &strict, 7).unwrap();
        assert!(r.categories.iter().all(|c| c.low_support));
    }

    #[test]
    fn without_embeddings_reports_missing() {
        let ds = AnnotatedDataset::new(
            vec![ImageRecord::new("a", 1, 1)],
            vec![InstanceRecord::new("i", "a", "cat", None)],
            CategoryTable::default(),
            Provenance::in_memory(),
        )
        .unwrap();
        assert_eq!(
            appearance_diversity(&ds, &ObjectParams::default(), 0).unwrap_err(),
            MetricError::MissingAnnotations(vec![Annotation::InstanceEmbeddings])
        );
    }
}
