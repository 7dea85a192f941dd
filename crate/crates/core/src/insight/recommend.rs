use std::collections::BTreeSet;

use serde::Serialize;

use super::expand::{expand_query_term, SynonymTable};
use super::outcome::{Outcome, OutcomePredicate};
use crate::config::{AnalysisParams, ProbabilityUnit};
use crate::dataset::{AnnotatedDataset, SceneGroup};
use crate::error::MetricError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Category,
    Supercategory,
    SceneGroup,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRecommendation {
    pub target: String,
    pub term: String,
    pub term_kind: TermKind,
    pub probability: f64,
    pub successes: u64,
    pub support: u64,
    /// `target AND word` for every expansion of the term.
    pub expanded_queries: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRanking {
    pub target: String,
    pub outcome: OutcomePredicate,
    pub unit: ProbabilityUnit,
    pub min_support: u64,
    /// Outcome rate over every image (or instance) of the target.
    pub base_probability: Option<f64>,
    pub base_support: u64,
    /// Descending by probability, then support, then term kind and name.
    pub recommendations: Vec<QueryRecommendation>,
}

struct Candidate {
    term: String,
    kind: TermKind,
    successes: u64,
    support: u64,
}

/// Ranks every other category, supercategory and scene group by the
/// probability that the target satisfies `outcome` on images containing the
/// term. Term presence ignores the target's own instances.
pub fn rank_queries(
    ds: &AnnotatedDataset,
    target: &str,
    outcome: &OutcomePredicate,
    params: &AnalysisParams,
    synonyms: &SynonymTable,
) -> Result<QueryRanking, MetricError> {
    if !ds.categories().contains(target) {
        return Err(MetricError::UnknownCategory(target.into()));
    }
    let bound = Outcome::bind(ds, outcome, &params.object)?;
    let unit = params.insight.probability_unit;
    let min_support = params.insight.min_support;

    let cats: Vec<&str> = ds.categories().categories().filter(|c| *c != target).collect();
    let supers: Vec<&str> = ds
        .categories()
        .supercategories()
        .into_iter()
        .filter(|s| *s != target && !ds.categories().contains(s))
        .collect();
    let mut cands: Vec<Candidate> = cats
        .iter()
        .map(|c| (c.to_string(), TermKind::Category))
        .chain(supers.iter().map(|s| (s.to_string(), TermKind::Supercategory)))
        .chain(SceneGroup::ALL.iter().map(|g| (g.id().to_string(), TermKind::SceneGroup)))
        .map(|(term, kind)| Candidate { term, kind, successes: 0, support: 0 })
        .collect();
    let n_cats = cats.len();
    let n_supers = supers.len();

    let (mut base_k, mut base_n) = (0u64, 0u64);
    for (pos, image) in ds.images().iter().enumerate() {
        let targets: Vec<_> = ds.instances_of(pos).filter(|i| i.category == target).collect();
        if targets.is_empty() {
            continue;
        }
        let hits = targets.iter().filter(|i| bound.holds(i, pos)).count() as u64;
        let (k, n) = match unit {
            ProbabilityUnit::PerImage => (u64::from(hits > 0), 1),
            ProbabilityUnit::PerInstance => (hits, targets.len() as u64),
        };
        base_k += k;
        base_n += n;

        let others: BTreeSet<&str> = ds
            .instances_of(pos)
            .filter(|i| i.category != target)
            .map(|i| i.category.as_str())
            .collect();
        let other_supers: BTreeSet<&str> = others.iter().map(|c| ds.supercategory_of(c)).collect();
        let mut bump = |i: usize| {
            cands[i].successes += k;
            cands[i].support += n;
        };
        for c in &others {
            if let Ok(i) = cats.binary_search(c) {
                bump(i);
            }
        }
        for s in &other_supers {
            if let Ok(i) = supers.binary_search(s) {
                bump(n_cats + i);
            }
        }
        if let Some(g) = image.scene_group {
            bump(n_cats + n_supers + g.index());
        }
    }

    let mut kept: Vec<Candidate> = cands.into_iter().filter(|c| c.support >= min_support && c.support > 0).collect();
    if kept.is_empty() {
        return Err(MetricError::NoCandidates(min_support));
    }
    // exact comparison of k1/n1 against k2/n2
    kept.sort_by(|a, b| {
        (u128::from(b.successes) * u128::from(a.support))
            .cmp(&(u128::from(a.successes) * u128::from(b.support)))
            .then(b.support.cmp(&a.support))
            .then(a.kind.cmp(&b.kind))
            .then_with(|| a.term.cmp(&b.term))
    });
    let recommendations = kept
        .into_iter()
        .map(|c| {
            let expanded_queries = expand_query_term(&c.term, ds.categories().scenes(), synonyms, ds.categories())
                .unwrap_or_else(|_| vec![c.term.clone()])
                .into_iter()
                .map(|w| format!("{target} AND {w}"))
                .collect();
            QueryRecommendation {
                target: target.into(),
                probability: c.successes as f64 / c.support as f64,
                term: c.term,
                term_kind: c.kind,
                successes: c.successes,
                support: c.support,
                expanded_queries,
            }
        })
        .collect();
    Ok(QueryRanking {
        target: target.into(),
        outcome: outcome.clone(),
        unit,
        min_support,
        base_probability: (base_n > 0).then(|| base_k as f64 / base_n as f64),
        base_support: base_n,
        recommendations,
    })
}
