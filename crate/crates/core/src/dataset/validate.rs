use serde::Serialize;

use super::model::AnnotatedDataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    BboxOutOfBounds,
    ZeroArea,
    DuplicateId,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::BboxOutOfBounds => "bbox-out-of-bounds",
            ViolationKind::ZeroArea => "zero-area",
            ViolationKind::DuplicateId => "duplicate-id",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub record_id: String,
    pub message: String,
}

/// Non-fatal problems in a loaded dataset. Empty when clean.
pub fn validate(dataset: &AnnotatedDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    for dup in dataset.duplicates() {
        out.push(Violation {
            kind: ViolationKind::DuplicateId,
            record_id: dup.id.clone(),
            message: format!("{} id {:?} appears more than once; later copy ignored", dup.kind, dup.id),
        });
    }
    for inst in dataset.instances() {
        let Some(b) = inst.bbox else { continue };
        if b.w <= 0.0 || b.h <= 0.0 {
            out.push(Violation {
                kind: ViolationKind::ZeroArea,
                record_id: inst.instance_id.clone(),
                message: format!("bbox {}x{} has no area", b.w, b.h),
            });
        }
        let image = dataset.image_of(inst);
        if !b.within(f64::from(image.width), f64::from(image.height)) {
            out.push(Violation {
                kind: ViolationKind::BboxOutOfBounds,
                record_id: inst.instance_id.clone(),
                message: format!(
                    "bbox ({}, {}, {}, {}) exceeds image {} of size {}x{}",
                    b.x, b.y, b.w, b.h, image.image_id, image.width, image.height
                ),
            });
        }
    }
    out
}
