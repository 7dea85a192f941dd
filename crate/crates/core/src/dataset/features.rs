//! Feature file reader and attachment.
//!
//! The file is line-delimited JSON. The first non-blank record must be a
//! `header`; the rest are `image_feature` or `instance_feature` records:
//!
//! ```text
//! {"kind":"header","image_dim":4096,"instance_dim":64,"embedders":{"scene":"resnet18-places365"}}
//! {"kind":"image_feature","image_id":"a","embedding":[...],"scene":"church/indoor","tag_languages":["fr"]}
//! {"kind":"instance_feature","instance_id":"i1","embedding":[...64 values],"face_detected":true}
//! ```
//!
//! Image records may carry `scene_group` directly or a fine `scene` name that is
//! mapped through the shipped hierarchy. Every field other than the ID is optional.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::AnnotatedDataset;
use super::scenes::{SceneGroup, SceneHierarchy};
use crate::error::DatasetError;

/// Length of every instance embedding.
pub const INSTANCE_DIM: usize = 64;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureHeader {
    pub image_dim: usize,
    #[serde(default = "default_instance_dim")]
    pub instance_dim: usize,
    #[serde(default)]
    pub embedders: BTreeMap<String, String>,
}

fn default_instance_dim() -> usize {
    INSTANCE_DIM
}

/// Precomputed perceptual features keyed by image or instance ID.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureStore {
    pub header: Option<FeatureHeader>,
    pub image_features: BTreeMap<String, Vec<f64>>,
    pub instance_features: BTreeMap<String, Vec<f64>>,
    pub face_flags: BTreeMap<String, bool>,
    pub scene_groups: BTreeMap<String, SceneGroup>,
    pub tag_languages: BTreeMap<String, Vec<String>>,
}

impl FeatureStore {
    pub fn image_dim(&self) -> Option<usize> {
        self.header.as_ref().map(|h| h.image_dim)
    }

    fn image_ids(&self) -> BTreeSet<&str> {
        self.image_features
            .keys()
            .chain(self.scene_groups.keys())
            .chain(self.tag_languages.keys())
            .map(String::as_str)
            .collect()
    }

    fn instance_ids(&self) -> BTreeSet<&str> {
        self.instance_features
            .keys()
            .chain(self.face_flags.keys())
            .map(String::as_str)
            .collect()
    }
}

/// How much of a dataset a feature file covered.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureCoverage {
    /// Fraction of images with at least one feature record.
    pub image_coverage: f64,
    /// Fraction of boxed instances with a feature record; `None` without boxes.
    pub instance_coverage: Option<f64>,
    pub missing_images: Vec<String>,
    pub missing_instances: Vec<String>,
    /// IDs in the feature file that matched nothing; skipped.
    pub unknown_ids: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FeatureRecord {
    Header(FeatureHeader),
    ImageFeature(ImageFeature),
    InstanceFeature(InstanceFeature),
}

#[derive(Serialize, Deserialize)]
struct ImageFeature {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scene_group: Option<SceneGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scene: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag_languages: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFeature {
    instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    face_detected: Option<bool>,
}

pub fn load_feature_file(path: &Path) -> Result<FeatureStore, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let parse_err = |line: usize, message: String| DatasetError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let scenes = SceneHierarchy::builtin();
    let mut store = FeatureStore::default();

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line_no = idx + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let record: FeatureRecord =
            serde_json::from_str(text).map_err(|e| parse_err(line_no, e.to_string()))?;
        let header = match (&store.header, record) {
            (None, FeatureRecord::Header(h)) => {
                if h.instance_dim != INSTANCE_DIM {
                    return Err(DatasetError::Features(format!(
                        "header declares instance_dim {}, expected {INSTANCE_DIM}",
                        h.instance_dim
                    )));
                }
                store.header = Some(h);
                continue;
            }
            (Some(_), FeatureRecord::Header(_)) => {
                return Err(parse_err(line_no, "second header record".into()));
            }
            (None, _) => return Err(parse_err(line_no, "first record must be the header".into())),
            (Some(h), record) => (h.image_dim, record),
        };
        match header {
            (dim, FeatureRecord::ImageFeature(f)) => {
                if let Some(v) = f.embedding {
                    check_dim("image", &f.image_id, dim, &v)?;
                    store.image_features.insert(f.image_id.clone(), v);
                }
                let group = match (f.scene_group, f.scene) {
                    (Some(g), _) => Some(g),
                    (None, Some(scene)) => Some(scenes.group_of(&scene).ok_or_else(|| {
                        parse_err(line_no, format!("unknown scene {scene:?}"))
                    })?),
                    (None, None) => None,
                };
                if let Some(g) = group {
                    store.scene_groups.insert(f.image_id.clone(), g);
                }
                if let Some(langs) = f.tag_languages {
                    store.tag_languages.insert(f.image_id, langs);
                }
            }
            (_, FeatureRecord::InstanceFeature(f)) => {
                if let Some(v) = f.embedding {
                    check_dim("instance", &f.instance_id, INSTANCE_DIM, &v)?;
                    store.instance_features.insert(f.instance_id.clone(), v);
                }
                if let Some(face) = f.face_detected {
                    store.face_flags.insert(f.instance_id, face);
                }
            }
            (_, FeatureRecord::Header(_)) => unreachable!(),
        }
    }
    if store.header.is_none() {
        return Err(DatasetError::Features("missing header record".into()));
    }
    Ok(store)
}

fn check_dim(record: &'static str, id: &str, expected: usize, v: &[f64]) -> Result<(), DatasetError> {
    if v.len() != expected {
        return Err(DatasetError::DimensionMismatch {
            record,
            id: id.to_string(),
            expected,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(DatasetError::Features(format!("{record} {id}: non-finite embedding value")));
    }
    Ok(())
}

/// Writes `store` in the feature file format, header first and records in ID
/// order. A store without a header gets one inferred from its image vectors.
pub fn write_feature_file<W: Write>(store: &FeatureStore, mut out: W) -> std::io::Result<()> {
    let header = store.header.clone().unwrap_or_else(|| FeatureHeader {
        image_dim: store.image_features.values().next().map_or(0, Vec::len),
        instance_dim: INSTANCE_DIM,
        embedders: BTreeMap::new(),
    });
    let mut line = |r: &FeatureRecord| -> std::io::Result<()> {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
    };
    line(&FeatureRecord::Header(header))?;
    for id in store.image_ids() {
        line(&FeatureRecord::ImageFeature(ImageFeature {
            image_id: id.to_string(),
            embedding: store.image_features.get(id).cloned(),
            scene_group: store.scene_groups.get(id).copied(),
            scene: None,
            tag_languages: store.tag_languages.get(id).cloned(),
        }))?;
    }
    for id in store.instance_ids() {
        line(&FeatureRecord::InstanceFeature(InstanceFeature {
            instance_id: id.to_string(),
            embedding: store.instance_features.get(id).cloned(),
            face_detected: store.face_flags.get(id).copied(),
        }))?;
    }
    Ok(())
}

/// Reads `path` and merges its features into `dataset`.
pub fn attach_features(
    dataset: AnnotatedDataset,
    path: &Path,
) -> Result<(AnnotatedDataset, FeatureCoverage), DatasetError> {
    let store = load_feature_file(path)?;
    attach_feature_store(dataset, store)
}

/// Merges an in-memory store. IDs that match no record are reported and dropped.
pub fn attach_feature_store(
    mut dataset: AnnotatedDataset,
    mut store: FeatureStore,
) -> Result<(AnnotatedDataset, FeatureCoverage), DatasetError> {
    if let Some(dim) = store.image_dim() {
        for (id, v) in &store.image_features {
            check_dim("image", id, dim, v)?;
        }
    }
    for (id, v) in &store.instance_features {
        check_dim("instance", id, INSTANCE_DIM, v)?;
    }

    let mut unknown: Vec<String> = store
        .image_ids()
        .into_iter()
        .filter(|id| dataset.image(id).is_none())
        .map(str::to_string)
        .collect();
    unknown.extend(
        store
            .instance_ids()
            .into_iter()
            .filter(|id| dataset.instance(id).is_none())
            .map(str::to_string),
    );
    for id in &unknown {
        store.image_features.remove(id);
        store.scene_groups.remove(id);
        store.tag_languages.remove(id);
        store.instance_features.remove(id);
        store.face_flags.remove(id);
    }
    if !unknown.is_empty() {
        log::warn!("{} feature records reference unknown IDs; skipped", unknown.len());
    }

    let covered_images = store.image_ids().into_iter().map(str::to_string).collect::<BTreeSet<_>>();
    let covered_instances = store
        .instance_ids()
        .into_iter()
        .map(str::to_string)
        .collect::<BTreeSet<_>>();

    let (images, instances, features) = dataset.parts_mut();
    for image in images.iter_mut() {
        let id = &image.image_id;
        if store.image_features.contains_key(id) {
            image.image_embedding_id = Some(id.clone());
        }
        if let Some(g) = store.scene_groups.get(id) {
            image.scene_group = Some(*g);
        }
        if let Some(langs) = store.tag_languages.get(id) {
            image.tag_languages = langs.clone();
        }
    }
    for inst in instances.iter_mut() {
        let id = &inst.instance_id;
        if store.instance_features.contains_key(id) {
            inst.instance_embedding_id = Some(id.clone());
        }
        if let Some(face) = store.face_flags.get(id) {
            inst.face_detected = Some(*face);
        }
    }

    let missing_images: Vec<String> = images
        .iter()
        .filter(|i| !covered_images.contains(&i.image_id))
        .map(|i| i.image_id.clone())
        .collect();
    let boxed: Vec<&str> = instances
        .iter()
        .filter(|i| i.bbox.is_some())
        .map(|i| i.instance_id.as_str())
        .collect();
    let missing_instances: Vec<String> = boxed
        .iter()
        .filter(|id| !covered_instances.contains(**id))
        .map(|id| id.to_string())
        .collect();
    let image_coverage = if images.is_empty() {
        0.0
    } else {
        (images.len() - missing_images.len()) as f64 / images.len() as f64
    };
    let instance_coverage = (!boxed.is_empty())
        .then(|| (boxed.len() - missing_instances.len()) as f64 / boxed.len() as f64);
    if !missing_images.is_empty() {
        log::warn!("{} images have no feature record", missing_images.len());
    }

    *features = store;
    Ok((
        dataset,
        FeatureCoverage {
            image_coverage,
            instance_coverage,
            missing_images,
            missing_instances,
            unknown_ids: unknown,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{BBox, CategoryTable, ImageRecord, InstanceRecord, Provenance};
    use std::io::Write;

    fn toy(n: usize) -> AnnotatedDataset {
        let images = (0..n).map(|i| ImageRecord::new(format!("img{i}"), 100, 100)).collect();
        let instances = (0..n)
            .map(|i| {
                InstanceRecord::new(
                    format!("ins{i}"),
                    format!("img{i}"),
                    "person",
                    Some(BBox::new(0.0, 0.0, 10.0, 10.0)),
                )
            })
            .collect();
        AnnotatedDataset::new(images, instances, CategoryTable::default(), Provenance::in_memory())
            .unwrap()
    }

    fn feature_file(image_ids: &[usize], instance_len: usize) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"kind":"header","image_dim":3,"instance_dim":64,"embedders":{{"image":"fake"}}}}"#).unwrap();
        for i in image_ids {
            writeln!(
                f,
                r#"{{"kind":"image_feature","image_id":"img{i}","embedding":[1,2,3],"scene":"church/indoor","tag_languages":["en"]}}"#
            )
            .unwrap();
            let v = vec![0.5; instance_len];
            writeln!(
                f,
                r#"{{"kind":"instance_feature","instance_id":"ins{i}","embedding":{},"face_detected":true}}"#,
                serde_json::to_string(&v).unwrap()
            )
            .unwrap();
        }
        f
    }

    #[test]
    fn full_coverage() {
        let ids: Vec<usize> = (0..10).collect();
        let f = feature_file(&ids, 64);
        let (ds, cov) = attach_features(toy(10), f.path()).unwrap();
        assert_eq!(cov.image_coverage, 1.0);
        assert_eq!(cov.instance_coverage, Some(1.0));
        assert_eq!(ds.images()[0].scene_group, Some(SceneGroup::IndoorCultural));
        assert_eq!(ds.instances()[0].face_detected, Some(true));
        assert_eq!(ds.image_embedding(&ds.images()[3]).unwrap(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn half_coverage_lists_missing_ids() {
        let f = feature_file(&[0, 1, 2, 3, 4], 64);
        let (_, cov) = attach_features(toy(10), f.path()).unwrap();
        assert_eq!(cov.image_coverage, 0.5);
        assert_eq!(cov.missing_images, vec!["img5", "img6", "img7", "img8", "img9"]);
    }

    #[test]
    fn short_instance_vector_is_dimension_mismatch() {
        let f = feature_file(&[0], 63);
        let err = attach_features(toy(2), f.path()).unwrap_err();
        assert!(matches!(err, DatasetError::DimensionMismatch { found: 63, expected: 64, .. }));
    }

    #[test]
    fn unknown_ids_are_reported_and_skipped() {
        let f = feature_file(&[0, 42], 64);
        let (ds, cov) = attach_features(toy(2), f.path()).unwrap();
        assert_eq!(cov.unknown_ids, vec!["img42", "ins42"]);
        assert!(!ds.features().image_features.contains_key("img42"));
    }

    #[test]
    fn write_then_load_round_trips() {
        let mut store = FeatureStore::default();
        store.image_features.insert("a".into(), vec![1.0, 2.5]);
        store.scene_groups.insert("a".into(), SceneGroup::HomeHotel);
        store.tag_languages.insert("b".into(), vec!["fr".into()]);
        store.instance_features.insert("i".into(), vec![0.5; INSTANCE_DIM]);
        store.face_flags.insert("j".into(), false);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write_feature_file(&store, &mut f).unwrap();
        let back = load_feature_file(f.path()).unwrap();
        assert_eq!(back.image_dim(), Some(2));
        assert_eq!(FeatureStore { header: None, ..back }, store);
    }

    #[test]
    fn header_is_required_first() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"kind":"image_feature","image_id":"img0"}}"#).unwrap();
        assert!(load_feature_file(f.path()).is_err());
    }
}
