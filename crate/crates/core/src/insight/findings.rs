//! Plain-language findings and suggested actions for each metric.

use std::collections::BTreeSet;

use super::report::{DuplicateSummary, Finding, LocalLanguage};
use super::{QueryRanking, TermKind, Tradeoff};
use crate::config::AnalysisParams;
use crate::dataset::{AnnotatedDataset, SceneGroup};
use crate::gender::{ContextualRepresentation, DistanceAnalysis, GenderAuditResult, GenderSeparability, GenderedCounts};
use crate::geo::{CountryDistribution, CountryTable, LocalTouristSeparability, SubregionSeparability, TagReport};
use crate::object::{
    AppearanceDiversity, CategoryCounts, CooccurrenceMatrix, RepresentationFlag, ScaleReport, SceneDiversityReport,
};

fn finding(insight: String, action: String) -> Finding {
    Finding { insight, action }
}

fn pct(x: f64) -> String {
    format!("{:.0}%", 100.0 * x)
}

fn country_name(table: &CountryTable, iso: &str) -> String {
    table.get(iso).map_or_else(|| iso.to_string(), |c| c.name.clone())
}

pub(super) fn object_counts(r: &CategoryCounts) -> Vec<Finding> {
    let mut under: Vec<_> = r.categories.iter().filter(|c| c.flag == RepresentationFlag::Under).collect();
    under.sort_by(|a, b| a.ratio_to_supercategory_mean.total_cmp(&b.ratio_to_supercategory_mean));
    let mut over: Vec<_> = r.categories.iter().filter(|c| c.flag == RepresentationFlag::Over).collect();
    over.sort_by(|a, b| b.ratio_to_supercategory_mean.total_cmp(&a.ratio_to_supercategory_mean));
    let describe = |c: &&crate::object::CategoryCount| {
        format!(
            "{} has {} instances, {:.2}x the {} average",
            c.category, c.instances, c.ratio_to_supercategory_mean, c.supercategory
        )
    };
    let mut out = Vec::new();
    for i in 0..under.len().max(over.len()) {
        if let Some(c) = under.get(i) {
            out.push(finding(describe(c), format!("Search for more images containing {}.", c.category)));
        }
        if let Some(c) = over.get(i) {
            out.push(finding(
                describe(c),
                format!("Check whether the volume of {} matches the intended distribution.", c.category),
            ));
        }
    }
    out
}

pub(super) fn duplicates(r: &DuplicateSummary, p: &AnalysisParams) -> Vec<Finding> {
    r.flagged
        .iter()
        .map(|d| {
            finding(
                format!(
                    "{} and {} boxes overlap above IOU {} in {} of their co-occurrences",
                    d.category_a,
                    d.category_b,
                    p.object.duplicate_iou,
                    pct(d.high_overlap_fraction)
                ),
                format!("Review objects labeled both {} and {} and keep one label.", d.category_a, d.category_b),
            )
        })
        .collect()
}

pub(super) fn scale(r: &ScaleReport) -> Vec<Finding> {
    r.skewed()
        .into_iter()
        .map(|d| {
            let share = d.bin_shares.iter().copied().fold(0.0, f64::max);
            finding(
                format!("{} of {} instances fall in size bin {}", pct(share), d.category, d.dominant_bin),
                format!(
                    "Search for {} at other sizes; the insight section ranks query terms that favor them.",
                    d.category
                ),
            )
        })
        .collect()
}

pub(super) fn cooccurrence(ds: &AnnotatedDataset, m: &CooccurrenceMatrix, p: &AnalysisParams) -> Vec<Finding> {
    let people: BTreeSet<&str> = ds.instances().iter().filter(|i| i.is_person).map(|i| i.category.as_str()).collect();
    let Some(person) = people.iter().next().copied() else {
        return Vec::new();
    };
    let mut rates: Vec<(&str, f64)> = ds
        .categories()
        .categories()
        .filter(|c| !people.contains(c) && m.count(c) >= p.insight.min_support)
        .filter_map(|c| m.conditional(person, c).map(|v| (c, v)))
        .collect();
    let with_person = ds
        .images()
        .iter()
        .enumerate()
        .filter(|(pos, _)| ds.instances_of(*pos).any(|i| i.category == person))
        .count();
    let base = with_person as f64 / ds.images().len().max(1) as f64;
    rates.retain(|(_, v)| *v < base);
    rates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
    rates
        .iter()
        .map(|(c, v)| {
            finding(
                format!("{} of images with {c} contain a {person}, against {} overall", pct(*v), pct(base)),
                format!("If {c} with people matters for the task, collect images of people with {c}."),
            )
        })
        .collect()
}

pub(super) fn scene_diversity(r: &SceneDiversityReport) -> Vec<Finding> {
    r.categories
        .iter()
        .filter(|c| !c.low_support)
        .map(|c| {
            let absent: Vec<&str> = c
                .group_counts
                .iter()
                .zip(SceneGroup::ALL)
                .filter(|(n, _)| **n == 0)
                .map(|(_, g)| g.label())
                .take(2)
                .collect();
            let suggestion = if absent.is_empty() {
                String::new()
            } else {
                format!(" such as {}", absent.join(" or "))
            };
            finding(
                format!(
                    "{} occurs in {} of {} scene groups (normalized entropy {:.2})",
                    c.category,
                    c.group_support,
                    SceneGroup::COUNT,
                    c.normalized_entropy
                ),
                format!("Collect images of {} in other scenes{suggestion}.", c.category),
            )
        })
        .collect()
}

pub(super) fn appearance(r: &AppearanceDiversity) -> Vec<Finding> {
    let ranked: Vec<_> = r.categories.iter().filter(|c| !c.low_support).collect();
    let mut means: Vec<f64> = ranked.iter().map(|c| c.mean_pairwise_distance).collect();
    means.sort_by(f64::total_cmp);
    let Some(&median) = means.get(means.len() / 2) else {
        return Vec::new();
    };
    ranked
        .into_iter()
        .filter(|c| c.mean_pairwise_distance < median)
        .map(|c| {
            finding(
                format!(
                    "{} is among the least visually diverse categories: mean pairwise embedding distance {:.3} against a median of {:.3}",
                    c.category, c.mean_pairwise_distance, median
                ),
                format!(
                    "Collect visually varied {} images; the tradeoff analysis names scene groups that help.",
                    c.category
                ),
            )
        })
        .collect()
}

pub(super) fn gender_context(r: &ContextualRepresentation) -> Vec<Finding> {
    let mut cells: Vec<_> = r
        .scene_groups
        .iter()
        .flatten()
        .chain(&r.supercategories)
        .filter(|c| c.significant)
        .collect();
    cells.sort_by(|a, b| a.q_value.total_cmp(&b.q_value).then(a.key.cmp(&b.key)));
    cells
        .into_iter()
        .map(|c| {
            let less = if c.female_fraction < c.male_fraction { "women" } else { "men" };
            finding(
                format!(
                    "{}: {} of female images vs {} of male images (q = {:.3})",
                    c.key,
                    pct(c.female_fraction),
                    pct(c.male_fraction),
                    c.q_value
                ),
                format!("Collect more images of {less} in the {} context.", c.key),
            )
        })
        .collect()
}

pub(super) fn gender_counts(r: &GenderedCounts) -> Vec<Finding> {
    r.categories
        .iter()
        .filter(|c| c.significant)
        .map(|c| {
            let less = if c.effect > 0.0 { "men" } else { "women" };
            finding(
                format!(
                    "{} appears in {} of female images and {} of male images",
                    c.category,
                    pct(c.female_rate),
                    pct(c.male_rate)
                ),
                format!("Collect more images of {less} with {}.", c.category),
            )
        })
        .collect()
}

pub(super) fn gender_distance(rs: &[DistanceAnalysis]) -> Vec<Finding> {
    let mut sig: Vec<&DistanceAnalysis> = rs.iter().filter(|r| r.distance_test.p_value < 0.05).collect();
    sig.sort_by(|a, b| a.distance_test.p_value.total_cmp(&b.distance_test.p_value).then(a.category.cmp(&b.category)));
    sig.into_iter()
        .map(|r| {
            let farther = if r.female_median > r.male_median { "women" } else { "men" };
            finding(
                format!(
                    "with {}, median scaled person-object distance is {:.2} for women and {:.2} for men (p = {:.3})",
                    r.category, r.female_median, r.male_median, r.distance_test.p_value
                ),
                format!("Collect images of {farther} actually interacting with {}.", r.category),
            )
        })
        .collect()
}

pub(super) fn gender_audit(r: &GenderAuditResult) -> Vec<Finding> {
    if r.n_unidentifiable == 0 {
        return Vec::new();
    }
    vec![finding(
        format!(
            "{} of {} gender-labeled images with no identifiable person are labeled male",
            pct(r.fraction_male),
            r.n_unidentifiable
        ),
        "Drop gender labels from images where no person is identifiable.".into(),
    )]
}

pub(super) fn gender_separability(rs: &[GenderSeparability]) -> Vec<Finding> {
    let mut sep: Vec<&GenderSeparability> = rs.iter().filter(|r| r.result.shuffled_ratio.is_some_and(|x| x >= 1.2)).collect();
    sep.sort_by(|a, b| b.result.accuracy.total_cmp(&a.result.accuracy).then(a.category.cmp(&b.category)));
    sep.into_iter()
        .map(|r| {
            finding(
                format!(
                    "images with {} differ by gender: held-out accuracy {:.2}, {:.2}x the shuffled baseline",
                    r.category,
                    r.result.accuracy,
                    r.result.shuffled_ratio.unwrap_or(0.0)
                ),
                format!(
                    "Inspect the exemplars and collect images of each gender with {} in its less common settings.",
                    r.category
                ),
            )
        })
        .collect()
}

pub(super) fn countries(r: &CountryDistribution) -> Vec<Finding> {
    let Some(top) = r.countries.first() else {
        return Vec::new();
    };
    let mut sparse: Vec<_> = r.countries.iter().collect();
    sparse.sort_by(|a, b| a.per_million.total_cmp(&b.per_million).then(a.iso.cmp(&b.iso)));
    let names: Vec<&str> = sparse.iter().take(3).map(|c| c.name.as_str()).collect();
    vec![finding(
        format!(
            "{} contributes {} of geotagged images; the fewest per capita come from {}",
            top.name,
            pct(top.images as f64 / r.n_geotagged.max(1) as f64),
            names.join(", ")
        ),
        format!("Collect more images from {}.", names.join(", ")),
    )]
}

pub(super) fn local_language(r: &LocalLanguage, table: &CountryTable) -> Vec<Finding> {
    let mut out: Vec<Finding> = r
        .nonlocal
        .countries
        .iter()
        .filter(|c| !c.low_support && c.wilson_lower_bound > 0.5)
        .map(|c| {
            let name = country_name(table, &c.country);
            finding(
                format!(
                    "at least {} of images from {name} carry tags in a non-local language",
                    pct(c.wilson_lower_bound)
                ),
                format!("Collect images of {name} taken by residents."),
            )
        })
        .collect();
    if let Some(f) = r.visitors.fraction {
        out.push(finding(
            format!(
                "{} of {} countries with enough images are mostly photographed by visitors",
                r.visitors.dominated.len(),
                r.visitors.n_supported
            ),
            format!(
                "Prioritize local photographers in visitor-dominated countries ({} of those checked).",
                pct(f)
            ),
        ));
    }
    out
}

pub(super) fn tags(r: &TagReport, table: &CountryTable) -> Vec<Finding> {
    r.over
        .iter()
        .map(|t| {
            let name = country_name(table, &t.country);
            finding(
                format!("tag {:?} is {:.1}x more common in {name} than elsewhere", t.tag, t.ratio),
                format!("Collect other kinds of images representing {name}."),
            )
        })
        .collect()
}

pub(super) fn subregions(rs: &[SubregionSeparability]) -> Vec<Finding> {
    rs.iter()
        .filter(|r| r.result.overall_accuracy > r.result.chance_accuracy * 1.5)
        .map(|r| {
            finding(
                format!(
                    "images tagged {:?} differ across subregions: accuracy {:.2} vs chance {:.2}",
                    r.tag, r.result.overall_accuracy, r.result.chance_accuracy
                ),
                format!("Review the per-subregion exemplars to see how {:?} is portrayed.", r.tag),
            )
        })
        .collect()
}

pub(super) fn local_tourist(r: &LocalTouristSeparability) -> Vec<Finding> {
    vec![finding(
        format!(
            "local vs tourist images: held-out accuracy {:.2} over {} local and {} tourist images",
            r.result.accuracy, r.n_local, r.n_tourist
        ),
        "Compare local and tourist exemplars before deciding whether to rebalance by photographer.".into(),
    )]
}

fn scene_label(id: &str) -> String {
    id.parse::<SceneGroup>().map_or_else(|_| id.to_string(), |s| s.label().to_string())
}

pub(super) fn recommendations(rs: &[QueryRanking]) -> Vec<Finding> {
    rs.iter()
        .filter_map(|r| {
            let top = r.recommendations.first()?;
            let term = match top.term_kind {
                TermKind::SceneGroup => format!("a {} scene", scene_label(&top.term)),
                _ => top.term.clone(),
            };
            let query = top
                .expanded_queries
                .first()
                .cloned()
                .unwrap_or_else(|| format!("{} AND {}", r.target, top.term));
            let more = top.expanded_queries.len().saturating_sub(1);
            let tail = if more > 0 { format!(" and {more} related queries") } else { String::new() };
            Some(finding(
                format!(
                    "{} with {term} satisfies {} with probability {:.2} (support {}, base rate {})",
                    r.target,
                    r.outcome,
                    top.probability,
                    top.support,
                    r.base_probability.map_or_else(|| "n/a".into(), |p| format!("{p:.2}"))
                ),
                format!("Search for \"{query}\"{tail}."),
            ))
        })
        .collect()
}

pub(super) fn tradeoffs(rs: &[Tradeoff]) -> Vec<Finding> {
    rs.iter()
        .filter_map(|t| {
            let label = scene_label(t.efficient_group?);
            Some(finding(
                format!("{label} balances commonness and appearance gain for {}", t.target),
                format!("Search for {} in {label} scenes.", t.target),
            ))
        })
        .collect()
}
