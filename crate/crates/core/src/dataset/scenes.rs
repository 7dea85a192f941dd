//! The 16 second-tier scene groups and the 365-scene mapping onto them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const SCENE_GROUPS_CSV: &str = include_str!("../../assets/scene_groups.csv");

/// Number of fine-grained scene categories in the shipped hierarchy.
pub const SCENE_COUNT: usize = 365;

/// Coarse scene group; serialized by its snake-case id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneGroup {
    ShoppingDining,
    IndoorWorkplace,
    HomeHotel,
    IndoorTransportation,
    IndoorSportsLeisure,
    IndoorCultural,
    WaterIceSnow,
    MountainsDesertSky,
    ForestFieldJungle,
    NaturalManMade,
    OutdoorTransportation,
    OutdoorCultural,
    SportsFieldsParks,
    IndustrialConstruction,
    HousesGardensFarms,
    CommercialTowns,
}

impl SceneGroup {
    pub const COUNT: usize = 16;

    pub const ALL: [SceneGroup; 16] = [
        SceneGroup::ShoppingDining,
        SceneGroup::IndoorWorkplace,
        SceneGroup::HomeHotel,
        SceneGroup::IndoorTransportation,
        SceneGroup::IndoorSportsLeisure,
        SceneGroup::IndoorCultural,
        SceneGroup::WaterIceSnow,
        SceneGroup::MountainsDesertSky,
        SceneGroup::ForestFieldJungle,
        SceneGroup::NaturalManMade,
        SceneGroup::OutdoorTransportation,
        SceneGroup::OutdoorCultural,
        SceneGroup::SportsFieldsParks,
        SceneGroup::IndustrialConstruction,
        SceneGroup::HousesGardensFarms,
        SceneGroup::CommercialTowns,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn id(self) -> &'static str {
        match self {
            SceneGroup::ShoppingDining => "shopping_dining",
            SceneGroup::IndoorWorkplace => "indoor_workplace",
            SceneGroup::HomeHotel => "home_hotel",
            SceneGroup::IndoorTransportation => "indoor_transportation",
            SceneGroup::IndoorSportsLeisure => "indoor_sports_leisure",
            SceneGroup::IndoorCultural => "indoor_cultural",
            SceneGroup::WaterIceSnow => "water_ice_snow",
            SceneGroup::MountainsDesertSky => "mountains_desert_sky",
            SceneGroup::ForestFieldJungle => "forest_field_jungle",
            SceneGroup::NaturalManMade => "natural_man_made",
            SceneGroup::OutdoorTransportation => "outdoor_transportation",
            SceneGroup::OutdoorCultural => "outdoor_cultural",
            SceneGroup::SportsFieldsParks => "sports_fields_parks",
            SceneGroup::IndustrialConstruction => "industrial_construction",
            SceneGroup::HousesGardensFarms => "houses_gardens_farms",
            SceneGroup::CommercialTowns => "commercial_towns",
        }
    }

    /// Human-readable label used in query strings and renderings.
    pub fn label(self) -> &'static str {
        match self {
            SceneGroup::ShoppingDining => "shopping and dining",
            SceneGroup::IndoorWorkplace => "workplace",
            SceneGroup::HomeHotel => "home or hotel",
            SceneGroup::IndoorTransportation => "indoor transportation",
            SceneGroup::IndoorSportsLeisure => "indoor sports and leisure",
            SceneGroup::IndoorCultural => "indoor cultural",
            SceneGroup::WaterIceSnow => "water, ice, snow",
            SceneGroup::MountainsDesertSky => "mountains, desert, sky",
            SceneGroup::ForestFieldJungle => "forest, field, jungle",
            SceneGroup::NaturalManMade => "man-made elements",
            SceneGroup::OutdoorTransportation => "outdoor transportation",
            SceneGroup::OutdoorCultural => "outdoor cultural",
            SceneGroup::SportsFieldsParks => "outdoor sports fields, parks",
            SceneGroup::IndustrialConstruction => "industrial and construction",
            SceneGroup::HousesGardensFarms => "houses, cabins, gardens, farms",
            SceneGroup::CommercialTowns => "commercial buildings, towns",
        }
    }
}

impl fmt::Display for SceneGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SceneGroup {
    type Err = String;

    /// Accepts either the snake-case id or the human-readable label.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim().to_lowercase();
        SceneGroup::ALL
            .into_iter()
            .find(|g| g.id() == needle || g.label() == needle)
            .ok_or_else(|| format!("unknown scene group {s:?}"))
    }
}

/// Mapping from the 365 fine scene names onto the 16 groups.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneHierarchy {
    scenes: BTreeMap<String, SceneGroup>,
}

impl SceneHierarchy {
    /// The shipped mapping. Parsed once.
    pub fn builtin() -> &'static SceneHierarchy {
        static HIERARCHY: OnceLock<SceneHierarchy> = OnceLock::new();
        HIERARCHY.get_or_init(|| {
            SceneHierarchy::parse(SCENE_GROUPS_CSV).expect("bundled scene hierarchy is valid")
        })
    }

    pub fn parse(csv_text: &str) -> Result<Self, String> {
        let mut scenes = BTreeMap::new();
        for (line_no, line) in csv_text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (scene, group) = line
                .split_once(',')
                .ok_or_else(|| format!("line {}: expected scene,group", line_no + 1))?;
            let group: SceneGroup = group.parse()?;
            if scenes.insert(scene.to_string(), group).is_some() {
                return Err(format!("line {}: duplicate scene {scene}", line_no + 1));
            }
        }
        Ok(Self { scenes })
    }

    pub fn group_of(&self, scene: &str) -> Option<SceneGroup> {
        self.scenes.get(scene).copied()
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    /// Fine scene names belonging to `group`, in name order.
    pub fn members(&self, group: SceneGroup) -> Vec<&str> {
        self.scenes
            .iter()
            .filter(|(_, g)| **g == group)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    pub fn scenes(&self) -> impl Iterator<Item = (&str, SceneGroup)> {
        self.scenes.iter().map(|(s, g)| (s.as_str(), *g))
    }
}

/// Turns a raw scene name such as `church/indoor` into query text (`church indoor`).
pub fn scene_query_text(scene: &str) -> String {
    scene.replace(['_', '/'], " ")
}
