use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{DuplicateDenominator, ObjectParams};
use crate::dataset::{AnnotatedDataset, BBox};

/// Intersection over union of two boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DuplicatePair {
    /// Lexicographically smaller category of the pair.
    pub category_a: String,
    pub category_b: String,
    /// Images containing boxed instances of both categories.
    pub cooccurrence_count: u64,
    /// Numerator of `high_overlap_fraction` under the configured denominator.
    pub high_overlap_count: u64,
    /// Denominator of `high_overlap_fraction`.
    pub denominator: u64,
    pub high_overlap_fraction: f64,
    pub flagged: bool,
}

/// Greedy one-to-one matching by descending IOU; returns the matched IOUs.
fn greedy_match(a: &[BBox], b: &[BBox]) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push((x.iou(y), i, j));
        }
    }
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::new();
    for (v, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            out.push(v);
        }
    }
    out
}

#[derive(Default)]
struct Tally {
    images: u64,
    matched_images: u64,
    matched_pairs: u64,
    pair_capacity: u64,
}

/// Statistics for every co-occurring category pair, ordered by name. Boxes
/// that clip to nothing inside their image are ignored.
pub fn duplicate_pair_stats(ds: &AnnotatedDataset, params: &ObjectParams) -> Vec<DuplicatePair> {
    let mut tallies: BTreeMap<(String, String), Tally> = BTreeMap::new();
    for pos in 0..ds.images().len() {
        let mut boxes: BTreeMap<&str, Vec<BBox>> = BTreeMap::new();
        for inst in ds.instances_of(pos) {
            if let Some(b) = ds.clipped_bbox(inst).filter(|b| b.area() > 0.0) {
                boxes.entry(inst.category.as_str()).or_default().push(b);
            }
        }
        let cats: Vec<(&str, &Vec<BBox>)> = boxes.iter().map(|(c, b)| (*c, b)).collect();
        for (i, (ca, ba)) in cats.iter().enumerate() {
            for (cb, bb) in &cats[i + 1..] {
                let matched = greedy_match(ba, bb);
                let high = matched.iter().filter(|&&v| v > params.duplicate_iou).count() as u64;
                let t = tallies.entry((ca.to_string(), cb.to_string())).or_default();
                t.images += 1;
                t.matched_images += u64::from(high > 0);
                t.matched_pairs += high;
                t.pair_capacity += ba.len().min(bb.len()) as u64;
            }
        }
    }
    tallies
        .into_iter()
        .map(|((a, b), t)| {
            let (num, den) = match params.duplicate_denominator {
                DuplicateDenominator::Images => (t.matched_images, t.images),
                DuplicateDenominator::InstancePairs => (t.matched_pairs, t.pair_capacity),
            };
            let fraction = if den == 0 { 0.0 } else { num as f64 / den as f64 };
            DuplicatePair {
                category_a: a,
                category_b: b,
                cooccurrence_count: t.images,
                high_overlap_count: num,
                denominator: den,
                high_overlap_fraction: fraction,
                flagged: t.images >= params.duplicate_min_support
                    && fraction > params.duplicate_fraction,
            }
        })
        .collect()
}

/// Category pairs that look like two names for the same object, sorted by
/// fraction descending, then by names.
pub fn detect_duplicate_pairs(ds: &AnnotatedDataset, params: &ObjectParams) -> Vec<DuplicatePair> {
    let mut out: Vec<DuplicatePair> = duplicate_pair_stats(ds, params)
        .into_iter()
        .filter(|p| p.flagged)
        .collect();
    out.sort_by(|x, y| {
        y.high_overlap_fraction
            .total_cmp(&x.high_overlap_fraction)
            .then_with(|| x.category_a.cmp(&y.category_a))
            .then_with(|| x.category_b.cmp(&y.category_b))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoryTable, ImageRecord, InstanceRecord, Provenance};
    use proptest::prelude::*;

    /// `n` images with a bagel and a doughnut each; the first `matched` have the
    /// doughnut box shifted by one pixel (IOU about 0.97), the rest far apart.
    fn pair_set(n: usize, matched: usize) -> AnnotatedDataset {
        let mut images = Vec::new();
        let mut instances = Vec::new();
        for i in 0..n {
            images.push(ImageRecord::new(format!("img{i:02}"), 200, 200));
            let a = BBox::new(10.0, 10.0, 60.0, 60.0);
            let b = if i < matched { a.translate(1.0, 0.0) } else { BBox::new(120.0, 120.0, 60.0, 60.0) };
            instances.push(InstanceRecord::new(format!("a{i}"), format!("img{i:02}"), "bagel", Some(a)));
            instances.push(InstanceRecord::new(format!("b{i}"), format!("img{i:02}"), "doughnut", Some(b)));
        }
        AnnotatedDataset::new(images, instances, CategoryTable::default(), Provenance::in_memory()).unwrap()
    }

    #[test]
    fn seven_of_ten_flagged() {
        let r = detect_duplicate_pairs(&pair_set(10, 7), &ObjectParams::default());
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].category_a.as_str(), r[0].category_b.as_str()), ("bagel", "doughnut"));
        assert!((r[0].high_overlap_fraction - 0.7).abs() < 1e-12);
    }

    #[test]
    fn five_of_ten_not_flagged() {
        assert!(detect_duplicate_pairs(&pair_set(10, 5), &ObjectParams::default()).is_empty());
    }

    #[test]
    fn below_min_support_never_flagged() {
        assert!(detect_duplicate_pairs(&pair_set(4, 4), &ObjectParams::default()).is_empty());
    }

    #[test]
    fn instance_pair_denominator() {
        let params = ObjectParams {
            duplicate_denominator: DuplicateDenominator::InstancePairs,
            ..ObjectParams::default()
        };
        let stats = duplicate_pair_stats(&pair_set(10, 7), &params);
        assert_eq!((stats[0].high_overlap_count, stats[0].denominator), (7, 10));
    }

    #[test]
    fn greedy_is_one_to_one() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let m = greedy_match(&[a, a], &[a]);
        assert_eq!(m, vec![1.0]);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0.0..50.0f64, 0.0..50.0f64, 1.0..50.0f64, 1.0..50.0f64).prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_bounded_reflexive(a in arb_box(), b in arb_box()) {
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&b, &a));
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        }
    }
}
