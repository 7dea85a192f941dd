use serde::Serialize;

use crate::config::GenderParams;
use crate::dataset::{AnnotatedDataset, Annotation, BBox, Gender};
use crate::error::MetricError;
use crate::stats::{median, rank_sum_test, two_proportion_test, Alternative, TestResult};

/// Centre distance over `sqrt(area_p * area_o)`.
pub fn person_object_distance(person: &BBox, object: &BBox) -> Result<f64, MetricError> {
    for (b, name) in [(person, "person"), (object, "object")] {
        if !(b.area() > 0.0) {
            return Err(MetricError::ZeroArea(name.into()));
        }
    }
    let (px, py) = person.center();
    let (ox, oy) = object.center();
    Ok((px - ox).hypot(py - oy) / (person.area() * object.area()).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceSample {
    pub image_id: String,
    pub person_instance: String,
    /// The nearest instance of the category on the same image.
    pub object_instance: String,
    pub dist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceAnalysis {
    pub category: String,
    pub female: Vec<DistanceSample>,
    pub male: Vec<DistanceSample>,
    pub female_median: f64,
    pub male_median: f64,
    /// Rank-sum test of female against male distances.
    pub distance_test: TestResult,
    /// Share of female vs male images containing the category.
    pub frequency_test: TestResult,
    /// Evenly spaced along each gender's sorted distances, nearest first.
    pub female_exemplars: Vec<DistanceSample>,
    pub male_exemplars: Vec<DistanceSample>,
}

fn spread(sorted: &[DistanceSample], k: usize) -> Vec<DistanceSample> {
    let n = sorted.len();
    if k == 0 || n == 0 {
        return Vec::new();
    }
    if k >= n {
        return sorted.to_vec();
    }
    if k == 1 {
        return vec![sorted[0].clone()];
    }
    (0..k)
        .map(|i| sorted[(i * (n - 1) + (k - 1) / 2) / (k - 1)].clone())
        .collect()
}

/// Distances from each person on a gendered image to the nearest instance of
/// `category` on that image, compared across genders.
pub fn gendered_distance_analysis(
    ds: &AnnotatedDataset,
    category: &str,
    params: &GenderParams,
) -> Result<DistanceAnalysis, MetricError> {
    if !ds.categories().contains(category) {
        return Err(MetricError::UnknownCategory(category.into()));
    }
    let missing = ds.missing(&[Annotation::BoundingBoxes, Annotation::PersonInstances, Annotation::GenderLabels]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let mut female = Vec::new();
    let mut male = Vec::new();
    let (mut nf, mut nm, mut kf, mut km) = (0, 0, 0, 0);
    for (pos, img) in ds.images().iter().enumerate() {
        let has_category = ds.instances_of(pos).any(|i| i.category == category);
        match img.gender_label {
            Gender::Female => {
                nf += 1;
                kf += u64::from(has_category);
            }
            Gender::Male => {
                nm += 1;
                km += u64::from(has_category);
            }
            Gender::Unknown => continue,
        }
        if !has_category {
            continue;
        }
        let boxed = |want_person: bool| {
            ds.instances_of(pos).filter_map(move |i| {
                let keep = if want_person { i.is_person } else { i.category == category };
                let b = ds.clipped_bbox(i).filter(|b| b.area() > 0.0)?;
                keep.then_some((i, b))
            })
        };
        let objects: Vec<_> = boxed(false).collect();
        for (p, pb) in boxed(true) {
            let nearest = objects
                .iter()
                .filter(|(o, _)| o.instance_id != p.instance_id)
                .map(|(o, ob)| (person_object_distance(&pb, ob).expect("areas checked"), o))
                .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.instance_id.cmp(&b.1.instance_id)));
            let Some((dist, o)) = nearest else { continue };
            let sample = DistanceSample {
                image_id: img.image_id.clone(),
                person_instance: p.instance_id.clone(),
                object_instance: o.instance_id.clone(),
                dist,
            };
            if img.gender_label == Gender::Female {
                female.push(sample);
            } else {
                male.push(sample);
            }
        }
    }
    for (samples, g) in [(&female, Gender::Female), (&male, Gender::Male)] {
        if samples.len() < params.distance_min_n {
            return Err(MetricError::InsufficientSamples(format!(
                "{category}: {} {g} person-object pairs, need {}",
                samples.len(),
                params.distance_min_n
            )));
        }
    }
    let fd: Vec<f64> = female.iter().map(|s| s.dist).collect();
    let md: Vec<f64> = male.iter().map(|s| s.dist).collect();
    let distance_test = rank_sum_test(&fd, &md, Alternative::TwoSided)?;
    let frequency_test = two_proportion_test(kf, nf, km, nm)?;
    let by_dist = |a: &DistanceSample, b: &DistanceSample| a.dist.total_cmp(&b.dist).then_with(|| a.person_instance.cmp(&b.person_instance));
    female.sort_by(by_dist);
    male.sort_by(by_dist);
    Ok(DistanceAnalysis {
        category: category.into(),
        female_median: median(&fd),
        male_median: median(&md),
        female_exemplars: spread(&female, params.exemplars),
        male_exemplars: spread(&male, params.exemplars),
        female,
        male,
        distance_test,
        frequency_test,
    })
}
