use serde::Serialize;

use crate::config::GenderParams;
use crate::dataset::{AnnotatedDataset, Annotation, Gender, InstanceRecord, SceneGroup};
use crate::error::MetricError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Identifiability {
    Identifiable,
    Unidentifiable,
}

/// Unidentifiable when the box is smaller than `min_area` px² or no face was
/// detected. A missing face flag counts as not detected.
pub fn identifiability(person: &InstanceRecord, min_area: f64) -> Result<Identifiability, MetricError> {
    let b = person
        .bbox
        .ok_or_else(|| MetricError::MissingBBox(person.instance_id.clone()))?;
    Ok(if b.area() < min_area || person.face_detected != Some(true) {
        Identifiability::Unidentifiable
    } else {
        Identifiability::Identifiable
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SceneRatio {
    pub scene_group: &'static str,
    pub male: u64,
    pub female: u64,
    /// `male / female`; `None` unless both are nonzero.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenderAuditResult {
    /// Gender-labeled images whose every person is unidentifiable.
    pub n_unidentifiable: u64,
    pub n_male: u64,
    pub n_female: u64,
    pub fraction_male: f64,
    pub fraction_female: f64,
    /// Person instances in the audit without a face flag.
    pub persons_without_face_flag: u64,
    /// Images skipped because a person has no box.
    pub skipped_unboxed: u64,
    pub scene_ratios: Vec<SceneRatio>,
}

/// How often gender labels appear on images where nobody could be identified.
pub fn gender_inference_audit(ds: &AnnotatedDataset, params: &GenderParams) -> Result<GenderAuditResult, MetricError> {
    let missing = ds.missing(&[Annotation::GenderLabels, Annotation::PersonInstances]);
    if !missing.is_empty() {
        return Err(MetricError::MissingAnnotations(missing));
    }
    let (mut n_male, mut n_female, mut no_flag, mut skipped) = (0u64, 0u64, 0u64, 0u64);
    let mut scene = [(0u64, 0u64); SceneGroup::COUNT];
    'images: for (pos, img) in ds.images().iter().enumerate() {
        if !img.gender_label.is_known() {
            continue;
        }
        let persons: Vec<&InstanceRecord> = ds.instances_of(pos).filter(|i| i.is_person).collect();
        if persons.is_empty() {
            continue;
        }
        for p in &persons {
            match identifiability(p, params.identifiable_min_area) {
                Ok(Identifiability::Unidentifiable) => {}
                Ok(Identifiability::Identifiable) => continue 'images,
                Err(_) => {
                    skipped += 1;
                    continue 'images;
                }
            }
        }
        no_flag += persons.iter().filter(|p| p.face_detected.is_none()).count() as u64;
        let male = img.gender_label == Gender::Male;
        if male {
            n_male += 1;
        } else {
            n_female += 1;
        }
        if let Some(g) = img.scene_group {
            let cell = &mut scene[g.index()];
            if male {
                cell.0 += 1;
            } else {
                cell.1 += 1;
            }
        }
    }
    let n = n_male + n_female;
    if n == 0 {
        return Err(MetricError::InsufficientSamples(
            "no gender-labeled image has only unidentifiable people".into(),
        ));
    }
    let scene_ratios = SceneGroup::ALL
        .iter()
        .zip(scene)
        .filter(|(_, (m, f))| m + f > 0)
        .map(|(g, (male, female))| SceneRatio {
            scene_group: g.id(),
            male,
            female,
            ratio: (male > 0 && female > 0).then(|| male as f64 / female as f64),
        })
        .collect();
    Ok(GenderAuditResult {
        n_unidentifiable: n,
        n_male,
        n_female,
        fraction_male: n_male as f64 / n as f64,
        fraction_female: n_female as f64 / n as f64,
        persons_without_face_flag: no_flag,
        skipped_unboxed: skipped,
        scene_ratios,
    })
}
