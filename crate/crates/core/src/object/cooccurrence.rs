use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::dataset::{AnnotatedDataset, SceneGroup};

/// Image-level presence counts. Joint counts are stored once per unordered pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CooccurrenceMatrix {
    pub n_images: u64,
    pub categories: BTreeMap<String, u64>,
    pub supercategories: BTreeMap<String, u64>,
    pub scene_groups: BTreeMap<SceneGroup, u64>,
    pairs: BTreeMap<(String, String), u64>,
    with_supercategory: BTreeMap<(String, String), u64>,
    with_scene: BTreeMap<(String, SceneGroup), u64>,
}

/// One row of the sparse serialization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairStat {
    pub a: String,
    pub b: String,
    pub n_a: u64,
    pub n_b: u64,
    pub n_ab: u64,
    pub p_a_given_b: f64,
    pub p_b_given_a: f64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl CooccurrenceMatrix {
    pub fn count(&self, category: &str) -> u64 {
        self.categories.get(category).copied().unwrap_or(0)
    }

    /// `N(A and B)`; symmetric.
    pub fn joint(&self, a: &str, b: &str) -> u64 {
        if a == b {
            return self.count(a);
        }
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.pairs.get(&key).copied().unwrap_or(0)
    }

    /// `P(A | B)` over images; `None` when B never occurs.
    pub fn conditional(&self, a: &str, given: &str) -> Option<f64> {
        ratio(self.joint(a, given), self.count(given))
    }

    pub fn joint_supercategory(&self, category: &str, supercategory: &str) -> u64 {
        self.with_supercategory
            .get(&(category.to_string(), supercategory.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// `P(category | image has an object of supercategory)`.
    pub fn conditional_given_supercategory(&self, category: &str, supercategory: &str) -> Option<f64> {
        ratio(
            self.joint_supercategory(category, supercategory),
            self.supercategories.get(supercategory).copied().unwrap_or(0),
        )
    }

    pub fn joint_scene(&self, category: &str, group: SceneGroup) -> u64 {
        self.with_scene
            .get(&(category.to_string(), group))
            .copied()
            .unwrap_or(0)
    }

    /// `P(category | image is in scene group)`.
    pub fn conditional_given_scene(&self, category: &str, group: SceneGroup) -> Option<f64> {
        ratio(
            self.joint_scene(category, group),
            self.scene_groups.get(&group).copied().unwrap_or(0),
        )
    }

    fn stat(&self, a: &str, b: &str, n_a: u64, n_b: u64, n_ab: u64) -> PairStat {
        PairStat {
            a: a.to_string(),
            b: b.to_string(),
            n_a,
            n_b,
            n_ab,
            p_a_given_b: ratio(n_ab, n_b).unwrap_or(0.0),
            p_b_given_a: ratio(n_ab, n_a).unwrap_or(0.0),
        }
    }

    /// Category pairs with a nonzero joint count.
    pub fn category_pairs(&self) -> Vec<PairStat> {
        self.pairs
            .iter()
            .map(|((a, b), &n)| self.stat(a, b, self.count(a), self.count(b), n))
            .collect()
    }

    pub fn supercategory_pairs(&self) -> Vec<PairStat> {
        self.with_supercategory
            .iter()
            .map(|((c, s), &n)| self.stat(c, s, self.count(c), self.supercategories[s], n))
            .collect()
    }

    pub fn scene_pairs(&self) -> Vec<PairStat> {
        self.with_scene
            .iter()
            .map(|((c, g), &n)| self.stat(c, g.id(), self.count(c), self.scene_groups[g], n))
            .collect()
    }

    /// The single pair `(a, b)`, treating `b` as a category, supercategory or
    /// scene group in that order of precedence.
    pub fn lookup(&self, a: &str, b: &str) -> Option<PairStat> {
        if self.categories.contains_key(b) {
            return Some(self.stat(a, b, self.count(a), self.count(b), self.joint(a, b)));
        }
        if let Some(&n_b) = self.supercategories.get(b) {
            return Some(self.stat(a, b, self.count(a), n_b, self.joint_supercategory(a, b)));
        }
        let g: SceneGroup = b.parse().ok()?;
        let n_b = self.scene_groups.get(&g).copied().unwrap_or(0);
        Some(self.stat(a, g.id(), self.count(a), n_b, self.joint_scene(a, g)))
    }
}

#[derive(Serialize)]
struct SparseView<'a> {
    n_images: u64,
    categories: &'a BTreeMap<String, u64>,
    supercategories: &'a BTreeMap<String, u64>,
    scene_groups: BTreeMap<&'static str, u64>,
    category_pairs: Vec<PairStat>,
    supercategory_pairs: Vec<PairStat>,
    scene_pairs: Vec<PairStat>,
}

impl Serialize for CooccurrenceMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SparseView {
            n_images: self.n_images,
            categories: &self.categories,
            supercategories: &self.supercategories,
            scene_groups: self.scene_groups.iter().map(|(g, n)| (g.id(), *n)).collect(),
            category_pairs: self.category_pairs(),
            supercategory_pairs: self.supercategory_pairs(),
            scene_pairs: self.scene_pairs(),
        }
        .serialize(serializer)
    }
}

/// Image-level co-occurrence of categories with categories, supercategories
/// and scene groups.
pub fn cooccurrence(ds: &AnnotatedDataset) -> CooccurrenceMatrix {
    let mut m = CooccurrenceMatrix {
        n_images: ds.images().len() as u64,
        ..Default::default()
    };
    for (pos, image) in ds.images().iter().enumerate() {
        let cats: BTreeSet<&str> = ds.instances_of(pos).map(|i| i.category.as_str()).collect();
        let supers: BTreeSet<&str> = cats.iter().map(|c| ds.supercategory_of(c)).collect();
        for c in &cats {
            *m.categories.entry(c.to_string()).or_default() += 1;
        }
        for s in &supers {
            *m.supercategories.entry(s.to_string()).or_default() += 1;
        }
        let cats: Vec<&str> = cats.into_iter().collect();
        for (i, a) in cats.iter().enumerate() {
            for b in &cats[i + 1..] {
                *m.pairs.entry((a.to_string(), b.to_string())).or_default() += 1;
            }
            for s in &supers {
                *m.with_supercategory.entry((a.to_string(), s.to_string())).or_default() += 1;
            }
            if let Some(g) = image.scene_group {
                *m.with_scene.entry((a.to_string(), g)).or_default() += 1;
            }
        }
        if let Some(g) = image.scene_group {
            *m.scene_groups.entry(g).or_default() += 1;
        }
    }
    m
}
