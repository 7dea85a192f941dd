//! Data model, ingestion, feature attachment and validation.

mod canonical;
mod coco;
mod features;
mod lexicon;
mod model;
mod scenes;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub use canonical::write_canonical;
pub use features::{
    attach_feature_store, attach_features, load_feature_file, FeatureCoverage, FeatureHeader,
    FeatureStore, write_feature_file, INSTANCE_DIM,
};
pub use lexicon::{derive_gender_from_captions, GenderLexicon};
pub use model::{
    AnnotatedDataset, Annotation, BBox, CategoryTable, DatasetFormat, DuplicateRecord, Gender,
    ImageRecord, InstanceRecord, Provenance,
};
pub use scenes::{scene_query_text, SceneGroup, SceneHierarchy, SCENE_COUNT};
pub use validate::{validate, Violation, ViolationKind};

use crate::error::DatasetError;

/// Knobs that affect how raw annotations are turned into records.
#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub lexicon: GenderLexicon,
    /// Instance label to gender, for datasets that annotate people by label
    /// (e.g. `Woman`, `Man`) instead of captions.
    pub gender_label_map: BTreeMap<String, Gender>,
    /// Separate COCO captions file.
    pub captions_path: Option<PathBuf>,
    /// Categories treated as people when `is_person` is not given explicitly.
    pub person_categories: BTreeSet<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            lexicon: GenderLexicon::default(),
            gender_label_map: BTreeMap::new(),
            captions_path: None,
            person_categories: BTreeSet::from(["person".to_string()]),
        }
    }
}

pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    options: &LoadOptions,
) -> Result<AnnotatedDataset, DatasetError> {
    log::debug!("loading {} as {:?}", path.display(), format);
    match format {
        DatasetFormat::Canonical => canonical::load_canonical(path, options),
        DatasetFormat::Coco => coco::load_coco(path, options),
        DatasetFormat::InMemory => Err(DatasetError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "in-memory datasets cannot be loaded from a file".into(),
        }),
    }
}
