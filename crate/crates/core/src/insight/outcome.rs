use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::config::ObjectParams;
use crate::dataset::{AnnotatedDataset, Annotation, Gender, InstanceRecord, SceneGroup};
use crate::error::MetricError;
use crate::object::{area_fraction, scale_distribution, ScaleReport};

/// Condition a recommended query aims to make true for the target.
///
/// Text form: `size:XS,S,M`, `scene:shopping_dining,home_hotel`,
/// `cooccurs:kite`, `gender:female`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutcomePredicate {
    SizeBinIn(Vec<String>),
    SceneGroupIn(Vec<SceneGroup>),
    CooccursWith(Vec<String>),
    GenderIs(Gender),
}

impl OutcomePredicate {
    pub fn kind(&self) -> &'static str {
        match self {
            OutcomePredicate::SizeBinIn(_) => "size_bin_in",
            OutcomePredicate::SceneGroupIn(_) => "scene_group_in",
            OutcomePredicate::CooccursWith(_) => "cooccurs_with",
            OutcomePredicate::GenderIs(_) => "gender_is",
        }
    }
}

impl FromStr for OutcomePredicate {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MetricError::InvalidOutcome(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let items: Vec<&str> = rest.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
        if items.is_empty() {
            return Err(bad());
        }
        match kind.trim().to_ascii_lowercase().as_str() {
            "size" => Ok(OutcomePredicate::SizeBinIn(items.iter().map(|x| x.to_ascii_uppercase()).collect())),
            "scene" => items
                .iter()
                .map(|x| x.parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()
                .map(OutcomePredicate::SceneGroupIn),
            "cooccurs" => Ok(OutcomePredicate::CooccursWith(items.iter().map(|x| x.to_string()).collect())),
            "gender" if items.len() == 1 => match items[0].parse::<Gender>() {
                Ok(g) if g.is_known() => Ok(OutcomePredicate::GenderIs(g)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for OutcomePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomePredicate::SizeBinIn(bins) => write!(f, "size:{}", bins.join(",")),
            OutcomePredicate::SceneGroupIn(groups) => {
                let ids: Vec<&str> = groups.iter().map(|g| g.id()).collect();
                write!(f, "scene:{}", ids.join(","))
            }
            OutcomePredicate::CooccursWith(cats) => write!(f, "cooccurs:{}", cats.join(",")),
            OutcomePredicate::GenderIs(g) => write!(f, "gender:{g}"),
        }
    }
}

impl Serialize for OutcomePredicate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A predicate bound to a dataset, ready to test instances.
pub(crate) struct Outcome<'a> {
    ds: &'a AnnotatedDataset,
    predicate: &'a OutcomePredicate,
    scale: Option<(ScaleReport, Vec<bool>)>,
}

impl<'a> Outcome<'a> {
    pub(crate) fn bind(
        ds: &'a AnnotatedDataset,
        predicate: &'a OutcomePredicate,
        object: &ObjectParams,
    ) -> Result<Self, MetricError> {
        let needed: &[Annotation] = match predicate {
            OutcomePredicate::SizeBinIn(_) => &[Annotation::BoundingBoxes],
            OutcomePredicate::SceneGroupIn(_) => &[Annotation::SceneGroups],
            OutcomePredicate::CooccursWith(_) => &[],
            OutcomePredicate::GenderIs(_) => &[Annotation::GenderLabels],
        };
        let missing = ds.missing(needed);
        if !missing.is_empty() {
            return Err(MetricError::MissingAnnotations(missing));
        }
        let mut scale = None;
        match predicate {
            OutcomePredicate::SizeBinIn(labels) => {
                let report = scale_distribution(ds, object)?;
                let mut wanted = vec![false; report.bin_labels.len()];
                for l in labels {
                    let i = report.label_index(l).ok_or_else(|| {
                        MetricError::InvalidOutcome(format!("unknown size bin {l:?}; bins are {}", report.bin_labels.join(",")))
                    })?;
                    wanted[i] = true;
                }
                scale = Some((report, wanted));
            }
            OutcomePredicate::CooccursWith(cats) => {
                if let Some(c) = cats.iter().find(|c| !ds.categories().contains(c)) {
                    return Err(MetricError::UnknownCategory(c.clone()));
                }
            }
            _ => {}
        }
        Ok(Self { ds, predicate, scale })
    }

    /// Whether `inst` satisfies the predicate. Instances the predicate cannot
    /// be evaluated on (no box for a size outcome) do not.
    pub(crate) fn holds(&self, inst: &InstanceRecord, image_pos: usize) -> bool {
        let image = &self.ds.images()[image_pos];
        match self.predicate {
            OutcomePredicate::SizeBinIn(_) => {
                let (report, wanted) = self.scale.as_ref().expect("bound with scale");
                area_fraction(self.ds, inst).is_some_and(|a| wanted[report.bin_of(a)])
            }
            OutcomePredicate::SceneGroupIn(groups) => image.scene_group.is_some_and(|g| groups.contains(&g)),
            OutcomePredicate::CooccursWith(cats) => self
                .ds
                .instances_of(image_pos)
                .any(|o| o.instance_id != inst.instance_id && cats.contains(&o.category)),
            OutcomePredicate::GenderIs(g) => image.gender_label == *g,
        }
    }
}
