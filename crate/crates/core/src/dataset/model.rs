use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::features::FeatureStore;
use super::scenes::{SceneGroup, SceneHierarchy};
use crate::error::DatasetError;

/// Axis-aligned box in pixel coordinates: `(x, y)` is the top-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.w * s, self.h * s)
    }

    /// True when the box lies inside `[0, width] x [0, height]`.
    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.right() <= width && self.bottom() <= height
    }

    /// Intersection of the box with `[0, width] x [0, height]`; may have zero area.
    pub fn clip_to(&self, width: f64, height: f64) -> Self {
        let x0 = self.x.clamp(0.0, width);
        let y0 = self.y.clamp(0.0, height);
        let x1 = self.right().clamp(0.0, width);
        let y1 = self.bottom().clamp(0.0, height);
        Self::new(x0, y0, (x1 - x0).max(0.0), (y1 - y0).max(0.0))
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersection over union; 0 when the union is empty.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }
}

/// Image-level perceived gender label.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    #[default]
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Unknown => "unknown",
        }
    }

    pub fn is_known(self) -> bool {
        self != Gender::Unknown
    }

    pub fn swapped(self) -> Self {
        match self {
            Gender::Female => Gender::Male,
            Gender::Male => Gender::Female,
            Gender::Unknown => Gender::Unknown,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            "unknown" => Ok(Gender::Unknown),
            other => Err(format!("unknown gender label {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub captions: Vec<String>,
    #[serde(default)]
    pub gender_label: Gender,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tag_languages: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_group: Option<SceneGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_embedding_id: Option<String>,
    #[serde(flatten)]
    pub extras: BTreeMap<String, Value>,
}

impl ImageRecord {
    pub fn new(image_id: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            image_id: image_id.into(),
            width,
            height,
            captions: Vec::new(),
            gender_label: Gender::Unknown,
            country: None,
            tags: Vec::new(),
            tag_languages: Vec::new(),
            scene_group: None,
            image_embedding_id: None,
            extras: BTreeMap::new(),
        }
    }

    pub fn area(&self) -> f64 {
        f64::from(self.width) * f64::from(self.height)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub image_id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    #[serde(default)]
    pub is_person: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_detected: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_embedding_id: Option<String>,
    #[serde(flatten)]
    pub extras: BTreeMap<String, Value>,
}

impl InstanceRecord {
    pub fn new(
        instance_id: impl Into<String>,
        image_id: impl Into<String>,
        category: impl Into<String>,
        bbox: Option<BBox>,
    ) -> Self {
        let category = category.into();
        Self {
            instance_id: instance_id.into(),
            image_id: image_id.into(),
            is_person: category == "person",
            category,
            bbox,
            face_detected: None,
            instance_embedding_id: None,
            extras: BTreeMap::new(),
        }
    }
}

/// Category to supercategory map plus the scene hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryTable {
    supercategories: BTreeMap<String, String>,
    scenes: SceneHierarchy,
}

impl Default for CategoryTable {
    fn default() -> Self {
        Self {
            supercategories: BTreeMap::new(),
            scenes: SceneHierarchy::builtin().clone(),
        }
    }
}

impl CategoryTable {
    pub fn new(supercategories: BTreeMap<String, String>) -> Self {
        Self {
            supercategories,
            ..Self::default()
        }
    }

    /// Registers `category`; an existing entry is kept.
    pub fn insert(&mut self, category: impl Into<String>, supercategory: impl Into<String>) {
        self.supercategories
            .entry(category.into())
            .or_insert_with(|| supercategory.into());
    }

    pub fn supercategory(&self, category: &str) -> Option<&str> {
        self.supercategories.get(category).map(String::as_str)
    }

    pub fn contains(&self, category: &str) -> bool {
        self.supercategories.contains_key(category)
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.supercategories.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.supercategories
            .iter()
            .map(|(c, s)| (c.as_str(), s.as_str()))
    }

    /// Distinct supercategory names, sorted.
    pub fn supercategories(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.supercategories.values().map(String::as_str).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn members(&self, supercategory: &str) -> Vec<&str> {
        self.supercategories
            .iter()
            .filter(|(_, s)| s.as_str() == supercategory)
            .map(|(c, _)| c.as_str())
            .collect()
    }

    pub fn scenes(&self) -> &SceneHierarchy {
        &self.scenes
    }

    pub fn len(&self) -> usize {
        self.supercategories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supercategories.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Canonical,
    Coco,
    InMemory,
}

impl std::str::FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "canonical" => Ok(DatasetFormat::Canonical),
            "coco" => Ok(DatasetFormat::Coco),
            other => Err(format!("unknown dataset format {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub format: DatasetFormat,
    /// SHA-256 of the source bytes, hex encoded.
    pub content_sha256: String,
    #[serde(skip)]
    pub loaded_at: String,
}

impl Provenance {
    pub fn in_memory() -> Self {
        Self {
            source: "<memory>".into(),
            format: DatasetFormat::InMemory,
            content_sha256: String::new(),
            loaded_at: chrono::Utc::now().to_rfc3339(),
        }
    }
}

/// A record dropped at load because its ID was already taken.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DuplicateRecord {
    pub kind: &'static str,
    pub id: String,
}

/// Annotation kinds whose presence gates which metrics can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    InstanceLabels,
    BoundingBoxes,
    PersonInstances,
    GenderLabels,
    SceneGroups,
    InstanceEmbeddings,
    ImageEmbeddings,
    FaceFlags,
    CountryCodes,
    Tags,
    TagLanguages,
    CountryTable,
}

impl Annotation {
    pub fn as_str(self) -> &'static str {
        match self {
            Annotation::InstanceLabels => "instance_labels",
            Annotation::BoundingBoxes => "bounding_boxes",
            Annotation::PersonInstances => "person_instances",
            Annotation::GenderLabels => "gender_labels",
            Annotation::SceneGroups => "scene_groups",
            Annotation::InstanceEmbeddings => "instance_embeddings",
            Annotation::ImageEmbeddings => "image_embeddings",
            Annotation::FaceFlags => "face_flags",
            Annotation::CountryCodes => "country_codes",
            Annotation::Tags => "tags",
            Annotation::TagLanguages => "tag_languages",
            Annotation::CountryTable => "country_table",
        }
    }
}

/// Immutable, ID-sorted, referentially intact dataset.
#[derive(Clone, Debug)]
pub struct AnnotatedDataset {
    images: Vec<ImageRecord>,
    instances: Vec<InstanceRecord>,
    categories: CategoryTable,
    provenance: Provenance,
    features: FeatureStore,
    duplicates: Vec<DuplicateRecord>,
    image_index: HashMap<String, usize>,
    instance_index: HashMap<String, usize>,
    by_image: Vec<Vec<usize>>,
}

impl PartialEq for AnnotatedDataset {
    /// Compares content; provenance is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images
            && self.instances == other.instances
            && self.categories == other.categories
            && self.features == other.features
    }
}

impl AnnotatedDataset {
    /// Builds a dataset from loose records.
    ///
    /// Records are sorted by ID. A repeated ID keeps its first occurrence and the
    /// later one is listed in [`duplicates`](Self::duplicates). Categories used by
    /// instances but absent from `categories` are registered as their own
    /// supercategory.
    pub fn new(
        images: Vec<ImageRecord>,
        instances: Vec<InstanceRecord>,
        mut categories: CategoryTable,
        provenance: Provenance,
    ) -> Result<Self, DatasetError> {
        let mut duplicates = Vec::new();
        let images = dedup_sorted(images, |r| &r.image_id, "image", &mut duplicates);
        let instances = dedup_sorted(instances, |r| &r.instance_id, "instance", &mut duplicates);

        for image in &images {
            if image.width == 0 || image.height == 0 {
                return Err(DatasetError::InvalidImage {
                    image_id: image.image_id.clone(),
                    width: image.width,
                    height: image.height,
                });
            }
        }

        let image_index: HashMap<String, usize> = images
            .iter()
            .enumerate()
            .map(|(i, r)| (r.image_id.clone(), i))
            .collect();
        let mut by_image = vec![Vec::new(); images.len()];
        let mut instance_index = HashMap::with_capacity(instances.len());
        for (i, inst) in instances.iter().enumerate() {
            let Some(&img) = image_index.get(&inst.image_id) else {
                return Err(DatasetError::DanglingInstance {
                    instance_id: inst.instance_id.clone(),
                    image_id: inst.image_id.clone(),
                });
            };
            by_image[img].push(i);
            instance_index.insert(inst.instance_id.clone(), i);
            if !categories.contains(&inst.category) {
                categories.insert(inst.category.clone(), inst.category.clone());
            }
        }

        Ok(Self {
            images,
            instances,
            categories,
            provenance,
            features: FeatureStore::default(),
            duplicates,
            image_index,
            instance_index,
            by_image,
        })
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn instances(&self) -> &[InstanceRecord] {
        &self.instances
    }

    pub fn categories(&self) -> &CategoryTable {
        &self.categories
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn features(&self) -> &FeatureStore {
        &self.features
    }

    pub fn duplicates(&self) -> &[DuplicateRecord] {
        &self.duplicates
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.image_index.get(image_id).map(|&i| &self.images[i])
    }

    pub fn image_position(&self, image_id: &str) -> Option<usize> {
        self.image_index.get(image_id).copied()
    }

    pub fn instance(&self, instance_id: &str) -> Option<&InstanceRecord> {
        self.instance_index
            .get(instance_id)
            .map(|&i| &self.instances[i])
    }

    /// Instances on the image at position `image_pos` (ID order).
    pub fn instances_of(&self, image_pos: usize) -> impl Iterator<Item = &InstanceRecord> {
        self.by_image[image_pos]
            .iter()
            .map(move |&i| &self.instances[i])
    }

    /// Image records paired with their instances.
    pub fn iter_images(&self) -> impl Iterator<Item = (&ImageRecord, Vec<&InstanceRecord>)> {
        self.images
            .iter()
            .enumerate()
            .map(move |(pos, img)| (img, self.instances_of(pos).collect()))
    }

    pub fn image_of(&self, instance: &InstanceRecord) -> &ImageRecord {
        &self.images[self.image_index[&instance.image_id]]
    }

    /// Bounding box clipped to its image, if the instance has one.
    pub fn clipped_bbox(&self, instance: &InstanceRecord) -> Option<BBox> {
        let image = self.image_of(instance);
        instance
            .bbox
            .map(|b| b.clip_to(f64::from(image.width), f64::from(image.height)))
    }

    pub fn supercategory_of<'a>(&'a self, category: &'a str) -> &'a str {
        self.categories.supercategory(category).unwrap_or(category)
    }

    pub fn has(&self, annotation: Annotation) -> bool {
        match annotation {
            Annotation::InstanceLabels => !self.instances.is_empty(),
            Annotation::BoundingBoxes => self.instances.iter().any(|i| i.bbox.is_some()),
            Annotation::PersonInstances => self.instances.iter().any(|i| i.is_person),
            Annotation::GenderLabels => self.images.iter().any(|i| i.gender_label.is_known()),
            Annotation::SceneGroups => self.images.iter().any(|i| i.scene_group.is_some()),
            Annotation::InstanceEmbeddings => !self.features.instance_features.is_empty(),
            Annotation::ImageEmbeddings => !self.features.image_features.is_empty(),
            Annotation::FaceFlags => self.instances.iter().any(|i| i.face_detected.is_some()),
            Annotation::CountryCodes => self.images.iter().any(|i| i.country.is_some()),
            Annotation::Tags => self.images.iter().any(|i| !i.tags.is_empty()),
            Annotation::TagLanguages => self.images.iter().any(|i| !i.tag_languages.is_empty()),
            Annotation::CountryTable => false,
        }
    }

    /// Returns the subset of `needed` that is absent.
    pub fn missing(&self, needed: &[Annotation]) -> Vec<Annotation> {
        needed.iter().copied().filter(|a| !self.has(*a)).collect()
    }

    pub fn image_embedding(&self, image: &ImageRecord) -> Option<&[f64]> {
        self.features
            .image_features
            .get(&image.image_id)
            .map(Vec::as_slice)
    }

    pub fn instance_embedding(&self, instance: &InstanceRecord) -> Option<&[f64]> {
        self.features
            .instance_features
            .get(&instance.instance_id)
            .map(Vec::as_slice)
    }

    pub(crate) fn parts_mut(
        &mut self,
    ) -> (
        &mut Vec<ImageRecord>,
        &mut Vec<InstanceRecord>,
        &mut FeatureStore,
    ) {
        (&mut self.images, &mut self.instances, &mut self.features)
    }
}

fn dedup_sorted<T>(
    mut records: Vec<T>,
    key: impl Fn(&T) -> &String,
    kind: &'static str,
    duplicates: &mut Vec<DuplicateRecord>,
) -> Vec<T> {
    records.sort_by(|a, b| key(a).cmp(key(b)));
    let mut out: Vec<T> = Vec::with_capacity(records.len());
    for r in records {
        if out.last().is_some_and(|prev| key(prev) == key(&r)) {
            duplicates.push(DuplicateRecord {
                kind,
                id: key(&r).clone(),
            });
        } else {
            out.push(r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_basics() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(5.0, 0.0, 10.0, 10.0);
        assert_eq!(a.iou(&a), 1.0);
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.iou(&BBox::new(20.0, 20.0, 1.0, 1.0)), 0.0);
        assert_eq!(a.iou(&b), b.iou(&a));
    }

    #[test]
    fn clip_keeps_inside_part() {
        let b = BBox::new(-5.0, 90.0, 20.0, 20.0).clip_to(100.0, 100.0);
        assert_eq!(b, BBox::new(0.0, 90.0, 15.0, 10.0));
    }

    #[test]
    fn dangling_instance_names_the_instance() {
        let err = AnnotatedDataset::new(
            vec![ImageRecord::new("a", 10, 10)],
            vec![InstanceRecord::new("i9", "missing", "cat", None)],
            CategoryTable::default(),
            Provenance::in_memory(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("i9"));
    }

    #[test]
    fn duplicates_keep_first_and_are_recorded() {
        let mut second = ImageRecord::new("a", 20, 20);
        second.country = Some("FR".into());
        let ds = AnnotatedDataset::new(
            vec![ImageRecord::new("a", 10, 10), second],
            vec![],
            CategoryTable::default(),
            Provenance::in_memory(),
        )
        .unwrap();
        assert_eq!(ds.images().len(), 1);
        assert_eq!(ds.images()[0].width, 10);
        assert_eq!(ds.duplicates().len(), 1);
    }

    #[test]
    fn undeclared_category_becomes_its_own_supercategory() {
        let ds = AnnotatedDataset::new(
            vec![ImageRecord::new("a", 10, 10)],
            vec![InstanceRecord::new("i", "a", "kite", None)],
            CategoryTable::default(),
            Provenance::in_memory(),
        )
        .unwrap();
        assert_eq!(ds.supercategory_of("kite"), "kite");
    }
}
