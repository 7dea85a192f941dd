//! Bias and representation auditing for annotated image datasets.
//!
//! The crate is organised around an immutable [`dataset::AnnotatedDataset`]
//! and a set of pure metric functions over it:
//!
//! - [`dataset`]: data model, canonical/COCO ingestion, feature attachment, validation.
//! - [`stats`]: entropy, quantile binning, Wilson bounds, significance tests,
//!   random projection and a linear SVM.
//! - [`object`]: object counts, duplicate labels, scale, co-occurrence, scene and
//!   appearance diversity.
//! - [`gender`]: contextual representation, gendered counts and distances,
//!   interaction thresholds, label-inference audit, appearance separability.
//! - [`geo`]: country distribution, local language analysis, photographer
//!   classification, tag representation, subregion separability.
//! - [`insight`]: pairwise query ranking, query expansion, the diversity/commonness
//!   tradeoff and report assembly.
//!
//! Model inference never happens here. Scene groups, embeddings, face flags and
//! tag languages arrive through a feature file produced by an external extractor.

pub mod config;
pub mod dataset;
pub mod error;
pub mod gender;
pub mod geo;
pub mod insight;
pub mod object;
pub mod stats;
pub mod synthetic;

pub use config::{AnalysisParams, RunConfig};
pub use dataset::{AnnotatedDataset, BBox, Gender, ImageRecord, InstanceRecord, SceneGroup};
pub use error::{DatasetError, MetricError, StatsError};

/// Version string written into every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
