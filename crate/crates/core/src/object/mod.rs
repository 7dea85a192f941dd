//! Object-level metrics: counts, duplicate labels, scale, co-occurrence, scene
//! and appearance diversity.

mod appearance;
mod cooccurrence;
mod counts;
mod duplicates;
mod scale;
mod scenes;

pub use appearance::{
    appearance_diversity, category_diversity, AppearanceDiversity, Contribution, DistanceAggregate,
    DiversityScore,
};
pub use cooccurrence::{cooccurrence, CooccurrenceMatrix, PairStat};
pub use counts::{category_counts, CategoryCount, CategoryCounts, RepresentationFlag, SupercategoryCount};
pub use duplicates::{detect_duplicate_pairs, duplicate_pair_stats, iou, DuplicatePair};
pub use scale::{area_fraction, scale_distribution, size_labels, ScaleDistribution, ScaleReport};
pub use scenes::{scene_diversity, SceneDiversity, SceneDiversityReport};
