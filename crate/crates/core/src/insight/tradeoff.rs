use serde::Serialize;

use crate::config::{AnalysisParams, GainMode};
use crate::dataset::{AnnotatedDataset, Annotation, SceneGroup};
use crate::error::MetricError;
use crate::stats::euclidean;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub scene_group: &'static str,
    /// Share of scene-grouped dataset images in the group.
    pub commonness: f64,
    pub diversity_gain: f64,
    /// Target instances in the group.
    pub n: usize,
    pub efficient: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tradeoff {
    pub target: String,
    pub gain_mode: GainMode,
    pub n_instances: usize,
    pub points: Vec<TradeoffPoint>,
    /// Arg-max of `commonness * diversity_gain`; `None` when every product is 0.
    pub efficient_group: Option<&'static str>,
    pub max_gain_group: Option<&'static str>,
    pub max_commonness_group: Option<&'static str>,
}

fn centroid(rows: &[&[f64]]) -> Vec<f64> {
    let mut c = vec![0.0; rows[0].len()];
    for r in rows {
        for (a, b) in c.iter_mut().zip(*r) {
            *a += b;
        }
    }
    let n = rows.len() as f64;
    c.iter_mut().for_each(|a| *a /= n);
    c
}

/// Mean squared distance to the centroid.
fn total_variance(rows: &[&[f64]]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let c = centroid(rows);
    rows.iter().map(|r| euclidean(r, &c).powi(2)).sum::<f64>() / rows.len() as f64
}

fn arg_max(points: &[TradeoffPoint], key: impl Fn(&TradeoffPoint) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let v = key(p);
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// How common each scene group is against how much appearance diversity its
/// instances of `target` (a category or a supercategory) add.
pub fn diversity_commonness_tradeoff(
    ds: &AnnotatedDataset,
    target: &str,
    params: &AnalysisParams,
) -> Result<Tradeoff, MetricError> {
    let is_category = ds.categories().contains(target);
    if !is_category && ds.categories().members(target).is_empty() {
        return Err(MetricError::UnknownCategory(target.into()));
    }
    let missing = ds.missing(&[Annotation::SceneGroups, Annotation::InstanceEmbeddings]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let matches = |c: &str| if is_category { c == target } else { ds.supercategory_of(c) == target };

    let mut tagged: Vec<(Option<SceneGroup>, &[f64])> = Vec::new();
    let mut by_group: Vec<Vec<&[f64]>> = vec![Vec::new(); SceneGroup::COUNT];
    let mut group_images = [0u64; SceneGroup::COUNT];
    for (pos, img) in ds.images().iter().enumerate() {
        if let Some(g) = img.scene_group {
            group_images[g.index()] += 1;
        }
        for inst in ds.instances_of(pos).filter(|i| matches(&i.category)) {
            let Some(v) = ds.instance_embedding(inst) else { continue };
            tagged.push((img.scene_group, v));
            if let Some(g) = img.scene_group {
                by_group[g.index()].push(v);
            }
        }
    }
    let all: Vec<&[f64]> = tagged.iter().map(|(_, v)| *v).collect();
    let insight = &params.insight;
    if all.len() < insight.tradeoff_min_instances.max(1) {
        return Err(MetricError::InsufficientSamples(format!(
            "{target}: {} embedded instances, need {}",
            all.len(),
            insight.tradeoff_min_instances
        )));
    }
    let grouped_images: u64 = group_images.iter().sum();
    let c = centroid(&all);
    let full_variance = total_variance(&all);

    let mut points: Vec<TradeoffPoint> = SceneGroup::ALL
        .iter()
        .filter(|g| by_group[g.index()].len() >= insight.tradeoff_min_group_instances.max(1))
        .map(|g| {
            let members = &by_group[g.index()];
            let diversity_gain = match insight.gain_mode {
                GainMode::CentroidDistance => members.iter().map(|v| euclidean(v, &c)).sum::<f64>() / members.len() as f64,
                GainMode::LeaveGroupOut => {
                    let rest: Vec<&[f64]> = tagged
                        .iter()
                        .filter(|(h, _)| *h != Some(*g))
                        .map(|(_, v)| *v)
                        .collect();
                    (full_variance - total_variance(&rest)).max(0.0)
                }
            };
            TradeoffPoint {
                scene_group: g.id(),
                commonness: group_images[g.index()] as f64 / grouped_images as f64,
                diversity_gain,
                n: members.len(),
                efficient: false,
            }
        })
        .collect();
    let efficient = arg_max(&points, |p| p.commonness * p.diversity_gain);
    if let Some(i) = efficient {
        points[i].efficient = true;
    }
    let name = |i: Option<usize>| i.map(|i| points[i].scene_group);
    Ok(Tradeoff {
        target: target.into(),
        gain_mode: insight.gain_mode,
        n_instances: all.len(),
        efficient_group: name(efficient),
        max_gain_group: name(arg_max(&points, |p| p.diversity_gain)),
        max_commonness_group: name(arg_max(&points, |p| p.commonness)),
        points,
    })
}
