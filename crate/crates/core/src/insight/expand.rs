use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use crate::dataset::{scene_query_text, CategoryTable, SceneGroup, SceneHierarchy};
use crate::error::{DatasetError, MetricError};

const SYNONYMS_CSV: &str = include_str!("../../assets/synonyms.csv");

/// Term to alternative query words.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SynonymTable {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymTable {
    pub fn builtin() -> &'static SynonymTable {
        static TABLE: OnceLock<SynonymTable> = OnceLock::new();
        TABLE.get_or_init(|| SynonymTable::parse(SYNONYMS_CSV, Path::new("synonyms.csv")).expect("bundled synonyms are valid"))
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// `term,synonyms` with `;`-separated synonyms.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, DatasetError> {
        let mut entries = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| DatasetError::Parse {
                path: PathBuf::from(origin),
                line: i + 2,
                message: e.to_string(),
            })?;
            let term = rec.get(0).unwrap_or("").trim().to_lowercase();
            if term.is_empty() {
                continue;
            }
            let syns: Vec<String> = rec
                .get(1)
                .unwrap_or("")
                .split(';')
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect();
            entries.insert(term, syns);
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<&[String]> {
        self.entries.get(&term.to_lowercase()).map(Vec::as_slice)
    }
}

/// Concrete query words for a term. A scene group expands to its member
/// scenes, a category to itself plus its synonyms, a fine scene name or a
/// synonym-table entry to itself (plus synonyms). Anything else is unknown.
pub fn expand_query_term(
    term: &str,
    scenes: &SceneHierarchy,
    synonyms: &SynonymTable,
    categories: &CategoryTable,
) -> Result<Vec<String>, MetricError> {
    if let Ok(g) = term.parse::<SceneGroup>() {
        return Ok(scenes.members(g).into_iter().map(scene_query_text).collect());
    }
    let known = categories.contains(term) || synonyms.get(term).is_some() || scenes.group_of(term).is_some();
    if !known {
        return Err(MetricError::UnknownTerm(term.into()));
    }
    let head = if scenes.group_of(term).is_some() { scene_query_text(term) } else { term.to_string() };
    let mut out = vec![head];
    for s in synonyms.get(term).unwrap_or(&[]) {
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand(term: &str) -> Result<Vec<String>, MetricError> {
        let mut cats = CategoryTable::default();
        cats.insert("boat", "vehicle");
        cats.insert("zebra", "animal");
        expand_query_term(term, SceneHierarchy::builtin(), SynonymTable::builtin(), &cats)
    }

    #[test]
    fn scene_group_lists_member_scenes() {
        let q = expand("indoor_cultural").unwrap();
        assert!(q.iter().any(|s| s == "classroom"));
        assert!(q.iter().any(|s| s.starts_with("conference")));
    }

    #[test]
    fn category_includes_itself_and_synonyms() {
        let q = expand("boat").unwrap();
        assert_eq!(q[0], "boat");
        for s in ["barge", "ferry", "canoe"] {
            assert!(q.iter().any(|x| x == s), "{s}");
        }
        assert_eq!(expand("zebra").unwrap()[0], "zebra");
    }

    #[test]
    fn unknown_term() {
        assert_eq!(expand("xyzzy").unwrap_err(), MetricError::UnknownTerm("xyzzy".into()));
    }

    #[test]
    fn fine_scene_is_a_literal() {
        assert_eq!(expand("church/indoor").unwrap()[0], "church indoor");
    }
}
