use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::DatasetError;

const COUNTRIES_CSV: &str = include_str!("../../assets/countries.csv");

/// Population year of the shipped table.
pub const BUILTIN_POPULATION_YEAR: u32 = 2020;

/// The 17 sub-regions of the UN geoscheme used for grouping.
pub const SUBREGIONS: [&str; 17] = [
    "Australia and New Zealand",
    "Central Asia",
    "Eastern Asia",
    "Eastern Europe",
    "Latin America and the Caribbean",
    "Melanesia",
    "Micronesia",
    "Northern Africa",
    "Northern America",
    "Northern Europe",
    "Polynesia",
    "South-eastern Asia",
    "Southern Asia",
    "Southern Europe",
    "Sub-Saharan Africa",
    "Western Asia",
    "Western Europe",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountryInfo {
    pub iso: String,
    pub name: String,
    pub population: u64,
    pub official_languages: Vec<String>,
    pub subregion: String,
}

impl CountryInfo {
    pub fn is_official(&self, language: &str) -> bool {
        self.official_languages.iter().any(|l| l.eq_ignore_ascii_case(language))
    }
}

#[derive(Deserialize)]
struct Row {
    iso: String,
    name: String,
    population: u64,
    official_languages: String,
    subregion: String,
}

/// ISO code to country facts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountryTable {
    countries: BTreeMap<String, CountryInfo>,
    /// `builtin` or the file it was read from.
    pub source: String,
    pub population_year: Option<u32>,
}

impl CountryTable {
    pub fn builtin() -> &'static CountryTable {
        static TABLE: OnceLock<CountryTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let mut t = CountryTable::parse(COUNTRIES_CSV, Path::new("countries.csv"))
                .expect("bundled country table is valid");
            t.source = "builtin".into();
            t.population_year = Some(BUILTIN_POPULATION_YEAR);
            t
        })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses `iso,name,population,official_languages,subregion` with
    /// `;`-separated languages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, DatasetError> {
        let err = |line: usize, message: String| DatasetError::Parse {
            path: PathBuf::from(origin),
            line,
            message,
        };
        let mut countries = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| err(line, e.to_string()))?;
            let iso = row.iso.trim().to_ascii_uppercase();
            if row.population == 0 {
                return Err(err(line, format!("{iso}: population must be positive")));
            }
            let official_languages: Vec<String> = row
                .official_languages
                .split(';')
                .map(|l| l.trim().to_ascii_lowercase())
                .filter(|l| !l.is_empty())
                .collect();
            if official_languages.is_empty() {
                return Err(err(line, format!("{iso}: no official language")));
            }
            if !SUBREGIONS.contains(&row.subregion.as_str()) {
                return Err(err(line, format!("{iso}: unknown subregion {:?}", row.subregion)));
            }
            let info = CountryInfo {
                iso: iso.clone(),
                name: row.name,
                population: row.population,
                official_languages,
                subregion: row.subregion,
            };
            if countries.insert(iso.clone(), info).is_some() {
                return Err(err(line, format!("duplicate country {iso}")));
            }
        }
        Ok(Self {
            countries,
            source: origin.display().to_string(),
            population_year: None,
        })
    }

    pub fn get(&self, iso: &str) -> Option<&CountryInfo> {
        self.countries.get(iso)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CountryInfo> {
        self.countries.values()
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_is_well_formed() {
        let t = CountryTable::builtin();
        assert!(t.len() >= 190);
        let subregions: std::collections::BTreeSet<&str> = t.iter().map(|c| c.subregion.as_str()).collect();
        assert_eq!(subregions.len(), 17);
        assert!(t.get("FR").unwrap().is_official("fr"));
        assert_eq!(t.population_year, Some(2020));
    }

    #[test]
    fn rejects_bad_rows() {
        let head = "iso,name,population,official_languages,subregion\n";
        for row in [
            "XX,X,0,en,Northern Europe",
            "XX,X,5,,Northern Europe",
            "XX,X,5,en,Atlantis",
        ] {
            assert!(CountryTable::parse(&format!("{head}{row}\n"), Path::new("t.csv")).is_err(), "{row}");
        }
        let ok = CountryTable::parse(&format!("{head}xx,X,5,EN;de,Northern Europe\n"), Path::new("t.csv")).unwrap();
        assert_eq!(ok.get("XX").unwrap().official_languages, ["en", "de"]);
    }
}
