use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::Annotation;

/// Failures while reading or assembling a dataset or feature file.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("instance {instance_id} references missing image {image_id}")]
    DanglingInstance {
        instance_id: String,
        image_id: String,
    },

    #[error("image {image_id} has invalid dimensions {width}x{height}")]
    InvalidImage {
        image_id: String,
        width: u32,
        height: u32,
    },

    #[error("{record} {id}: vector has {found} dimensions, expected {expected}")]
    DimensionMismatch {
        record: &'static str,
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("gender lexicon lists {word:?} as both male and female")]
    OverlappingLexicon { word: String },

    #[error("invalid feature file: {0}")]
    Features(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Failures from the statistical primitives.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("all counts are zero")]
    AllZero,

    #[error("empty input")]
    Empty,

    #[error("input contains a non-finite value")]
    NonFinite,

    #[error("{distinct} distinct values cannot define {k} quantile bins")]
    DegenerateEdges { distinct: usize, k: usize },

    #[error("bin count must be at least 2, got {0}")]
    TooFewBins(usize),

    #[error("invalid proportion: {successes} successes out of {trials} trials")]
    InvalidProportion { successes: u64, trials: u64 },

    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),

    #[error("projection to {out_dim} dimensions exceeds input dimension {in_dim}")]
    ProjectionTooLarge { in_dim: usize, out_dim: usize },

    #[error("rows have inconsistent dimensions")]
    RaggedInput,

    #[error("labels contain a single class")]
    SingleClass,

    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("features and labels differ in length ({features} vs {labels})")]
    LengthMismatch { features: usize, labels: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Failures from the metric modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("missing annotations: {}", display_missing(.0))]
    MissingAnnotations(Vec<Annotation>),

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("unknown term {0:?}")]
    UnknownTerm(String),

    #[error("unknown country {0:?}")]
    UnknownCountry(String),

    #[error("image {0} has no country code")]
    MissingCountry(String),

    #[error("instance {0} has no bounding box")]
    MissingBBox(String),

    #[error("bounding box of {0} has zero area")]
    ZeroArea(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("no candidate meets the support threshold of {0}")]
    NoCandidates(u64),

    #[error("no computable sections")]
    NothingComputable,

    #[error("invalid outcome predicate: {0}")]
    InvalidOutcome(String),

    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn display_missing(missing: &[Annotation]) -> String {
    missing
        .iter()
        .map(|a| a.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}
