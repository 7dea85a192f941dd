//! Geography: per-capita country counts, tag languages, photographer
//! classification, tag representation and subregion separability.

mod countries;
mod language;
mod separability;
mod table;
mod tags;

pub use countries::{country_distribution, CountryCount, CountryDistribution};
pub use language::{
    classify_photographer, nonlocal_language_fraction, visitor_dominated_countries, CountryLanguageStat,
    CountryPhotographers, LanguageReport, Photographer, VisitorReport,
};
pub use separability::{
    local_tourist_separability, subregion_separability, LocalTouristSeparability, SubregionCount,
    SubregionSeparability,
};
pub use table::{CountryInfo, CountryTable, BUILTIN_POPULATION_YEAR, SUBREGIONS};
pub use tags::{tag_representation, TagReport, TagRepresentation};
