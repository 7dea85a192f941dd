//! COCO-style JSON adapter.
//!
//! Reads `images`, `annotations` and `categories`. Annotations carrying a
//! `caption` field (the COCO captions layout) are treated as captions, so a
//! captions file can be passed either merged into the instances file or
//! separately through [`LoadOptions::captions_path`]. Segmentation polygons are
//! dropped; small scalar fields such as `iscrowd` and `area` are kept as extras.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::canonical::hex;
use super::lexicon::derive_gender_from_captions;
use super::model::{
    AnnotatedDataset, BBox, CategoryTable, DatasetFormat, Gender, ImageRecord, InstanceRecord,
    Provenance,
};
use super::LoadOptions;
use crate::error::DatasetError;

#[derive(Deserialize, Clone, PartialEq, Eq, Hash)]
#[serde(untagged)]
enum CocoId {
    Int(i64),
    Str(String),
}

impl CocoId {
    fn to_key(&self) -> String {
        match self {
            CocoId::Int(i) => i.to_string(),
            CocoId::Str(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
struct CocoFile {
    #[serde(default)]
    images: Vec<CocoImage>,
    #[serde(default)]
    annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    categories: Vec<CocoCategory>,
}

#[derive(Deserialize)]
struct CocoImage {
    id: CocoId,
    width: u32,
    height: u32,
    #[serde(default)]
    file_name: Option<String>,
    #[serde(default)]
    country: Option<String>,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    #[serde(default)]
    id: Option<CocoId>,
    image_id: CocoId,
    #[serde(default)]
    category_id: Option<CocoId>,
    #[serde(default)]
    bbox: Option<[f64; 4]>,
    #[serde(default)]
    caption: Option<String>,
    #[serde(default)]
    iscrowd: Option<Value>,
    #[serde(default)]
    area: Option<f64>,
}

#[derive(Deserialize)]
struct CocoCategory {
    id: CocoId,
    name: String,
    #[serde(default)]
    supercategory: Option<String>,
}

fn read_coco(path: &Path, hasher: &mut Sha256) -> Result<CocoFile, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    hasher.update(&bytes);
    serde_json::from_slice(&bytes).map_err(|e| DatasetError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub(crate) fn load_coco(path: &Path, options: &LoadOptions) -> Result<AnnotatedDataset, DatasetError> {
    let mut hasher = Sha256::new();
    let mut file = read_coco(path, &mut hasher)?;
    if let Some(captions_path) = &options.captions_path {
        let extra = read_coco(captions_path, &mut hasher)?;
        file.annotations.extend(extra.annotations);
    }

    let mut categories = CategoryTable::default();
    let mut names: HashMap<CocoId, String> = HashMap::new();
    for cat in &file.categories {
        let supercategory = cat.supercategory.clone().unwrap_or_else(|| cat.name.clone());
        categories.insert(cat.name.clone(), supercategory);
        names.insert(cat.id.clone(), cat.name.clone());
    }

    let mut captions: HashMap<String, Vec<String>> = HashMap::new();
    let mut instances = Vec::new();
    for (pos, ann) in file.annotations.into_iter().enumerate() {
        let image_id = ann.image_id.to_key();
        if let Some(caption) = ann.caption {
            captions.entry(image_id).or_default().push(caption);
            continue;
        }
        let Some(cat_id) = ann.category_id else {
            return Err(DatasetError::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("annotation #{pos} has neither category_id nor caption"),
            });
        };
        let category = names.get(&cat_id).cloned().ok_or_else(|| DatasetError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("annotation #{pos} uses unknown category_id {}", cat_id.to_key()),
        })?;
        let instance_id = ann
            .id
            .map(|id| id.to_key())
            .unwrap_or_else(|| format!("ann-{pos}"));
        let mut extras = BTreeMap::new();
        if let Some(iscrowd) = ann.iscrowd {
            extras.insert("iscrowd".to_string(), iscrowd);
        }
        if let Some(area) = ann.area {
            extras.insert("area".to_string(), Value::from(area));
        }
        let is_person = options.person_categories.contains(&category)
            || options.gender_label_map.contains_key(&category);
        instances.push(InstanceRecord {
            instance_id,
            image_id,
            bbox: ann.bbox.map(|[x, y, w, h]| BBox::new(x, y, w, h)),
            is_person,
            category,
            face_detected: None,
            instance_embedding_id: None,
            extras,
        });
    }

    let mut labels_by_image: HashMap<&str, Vec<Gender>> = HashMap::new();
    for inst in &instances {
        if let Some(g) = options.gender_label_map.get(&inst.category) {
            labels_by_image.entry(inst.image_id.as_str()).or_default().push(*g);
        }
    }

    let mut images = Vec::with_capacity(file.images.len());
    for img in file.images {
        let image_id = img.id.to_key();
        let caps = captions.remove(&image_id).unwrap_or_default();
        let gender_label = if !caps.is_empty() {
            derive_gender_from_captions(&caps, &options.lexicon)
        } else {
            labels_by_image
                .get(image_id.as_str())
                .map(|gs| gender_from_labels(gs))
                .unwrap_or(Gender::Unknown)
        };
        let mut extras = BTreeMap::new();
        if let Some(name) = img.file_name {
            extras.insert("file_name".to_string(), Value::from(name));
        }
        images.push(ImageRecord {
            image_id,
            width: img.width,
            height: img.height,
            captions: caps,
            gender_label,
            country: img.country.map(|c| c.to_uppercase()),
            tags: img.tags,
            tag_languages: Vec::new(),
            scene_group: None,
            image_embedding_id: None,
            extras,
        });
    }

    let provenance = Provenance {
        source: path.display().to_string(),
        format: DatasetFormat::Coco,
        content_sha256: hex(&hasher.finalize()),
        loaded_at: chrono::Utc::now().to_rfc3339(),
    };
    AnnotatedDataset::new(images, instances, categories, provenance)
}

/// Same rule as captions: one side present and the other absent.
fn gender_from_labels(labels: &[Gender]) -> Gender {
    let male = labels.contains(&Gender::Male);
    let female = labels.contains(&Gender::Female);
    match (male, female) {
        (true, false) => Gender::Male,
        (false, true) => Gender::Female,
        _ => Gender::Unknown,
    }
}
