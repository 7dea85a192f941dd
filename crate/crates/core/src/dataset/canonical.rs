//! Line-delimited canonical format.
//!
//! Each non-blank line is a JSON object with a `kind` of `image`, `instance` or
//! `category`. Field names follow [`ImageRecord`] and [`InstanceRecord`]; unknown
//! fields are kept as extras and written back unchanged.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::lexicon::derive_gender_from_captions;
use super::model::{
    AnnotatedDataset, BBox, CategoryTable, DatasetFormat, Gender, ImageRecord, InstanceRecord,
    Provenance,
};
use super::scenes::SceneGroup;
use super::LoadOptions;
use crate::error::DatasetError;

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawRecord {
    Image(RawImage),
    Instance(RawInstance),
    Category(CategoryDecl),
}

#[derive(Deserialize)]
struct RawImage {
    image_id: String,
    width: u32,
    height: u32,
    #[serde(default)]
    captions: Vec<String>,
    #[serde(default)]
    gender_label: Option<Gender>,
    #[serde(default)]
    country: Option<String>,
    #[serde(default)]
    tags: Vec<String>,
    #[serde(default)]
    tag_languages: Vec<String>,
    #[serde(default)]
    scene_group: Option<SceneGroup>,
    #[serde(default)]
    image_embedding_id: Option<String>,
    #[serde(flatten)]
    extras: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
struct RawInstance {
    instance_id: String,
    image_id: String,
    category: String,
    #[serde(default)]
    bbox: Option<BBox>,
    #[serde(default)]
    is_person: Option<bool>,
    #[serde(default)]
    face_detected: Option<bool>,
    #[serde(default)]
    instance_embedding_id: Option<String>,
    #[serde(flatten)]
    extras: BTreeMap<String, Value>,
}

#[derive(Deserialize, Serialize)]
struct CategoryDecl {
    name: String,
    supercategory: String,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RecordRef<'a> {
    Category(CategoryDecl),
    Image(&'a ImageRecord),
    Instance(&'a InstanceRecord),
}

pub(crate) fn load_canonical(
    path: &Path,
    options: &LoadOptions,
) -> Result<AnnotatedDataset, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut hasher = Sha256::new();

    let mut images = Vec::new();
    let mut instances = Vec::new();
    let mut categories = CategoryTable::default();

    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(io_err)?;
        if read == 0 {
            break;
        }
        line_no += 1;
        hasher.update(line.as_bytes());
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(text).map_err(|e| DatasetError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        match record {
            RawRecord::Image(raw) => images.push(raw.into_record(options)),
            RawRecord::Instance(raw) => instances.push(raw.into_record(options)),
            RawRecord::Category(decl) => categories.insert(decl.name, decl.supercategory),
        }
    }

    let provenance = Provenance {
        source: path.display().to_string(),
        format: DatasetFormat::Canonical,
        content_sha256: hex(&hasher.finalize()),
        loaded_at: chrono::Utc::now().to_rfc3339(),
    };
    AnnotatedDataset::new(images, instances, categories, provenance)
}

impl RawImage {
    fn into_record(self, options: &LoadOptions) -> ImageRecord {
        let gender_label = self
            .gender_label
            .unwrap_or_else(|| derive_gender_from_captions(&self.captions, &options.lexicon));
        ImageRecord {
            image_id: self.image_id,
            width: self.width,
            height: self.height,
            captions: self.captions,
            gender_label,
            country: self.country.map(|c| c.to_uppercase()),
            tags: self.tags,
            tag_languages: self.tag_languages,
            scene_group: self.scene_group,
            image_embedding_id: self.image_embedding_id,
            extras: self.extras,
        }
    }
}

impl RawInstance {
    fn into_record(self, options: &LoadOptions) -> InstanceRecord {
        let is_person = self
            .is_person
            .unwrap_or_else(|| options.person_categories.contains(&self.category));
        InstanceRecord {
            instance_id: self.instance_id,
            image_id: self.image_id,
            category: self.category,
            bbox: self.bbox,
            is_person,
            face_detected: self.face_detected,
            instance_embedding_id: self.instance_embedding_id,
            extras: self.extras,
        }
    }
}

/// Writes `dataset` in canonical form: categories, then images, then instances.
pub fn write_canonical<W: Write>(dataset: &AnnotatedDataset, mut out: W) -> std::io::Result<()> {
    for (name, supercategory) in dataset.categories().entries() {
        let rec = RecordRef::Category(CategoryDecl {
            name: name.to_string(),
            supercategory: supercategory.to_string(),
        });
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    for image in dataset.images() {
        serde_json::to_writer(&mut out, &RecordRef::Image(image))?;
        out.write_all(b"\n")?;
    }
    for instance in dataset.instances() {
        serde_json::to_writer(&mut out, &RecordRef::Instance(instance))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
