use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::model::Gender;
use crate::error::DatasetError;

/// Disjoint male and female word lists used to label images from captions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderLexicon {
    male: BTreeSet<String>,
    female: BTreeSet<String>,
}

impl Default for GenderLexicon {
    fn default() -> Self {
        Self::new(
            ["man", "men", "boy", "boys", "male", "gentleman"],
            ["woman", "women", "girl", "girls", "female", "lady"],
        )
        .expect("default lexicon is disjoint")
    }
}

impl GenderLexicon {
    pub fn new<M, F>(male: M, female: F) -> Result<Self, DatasetError>
    where
        M: IntoIterator,
        M::Item: AsRef<str>,
        F: IntoIterator,
        F::Item: AsRef<str>,
    {
        let male: BTreeSet<String> = male
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        let female: BTreeSet<String> = female
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        if let Some(word) = male.intersection(&female).next() {
            return Err(DatasetError::OverlappingLexicon { word: word.clone() });
        }
        Ok(Self { male, female })
    }

    /// The same lexicon with the two word lists exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            male: self.female.clone(),
            female: self.male.clone(),
        }
    }

    pub fn male_words(&self) -> &BTreeSet<String> {
        &self.male
    }

    pub fn female_words(&self) -> &BTreeSet<String> {
        &self.female
    }
}

/// Male iff some caption has a male word and none has a female word; symmetric
/// for female; unknown otherwise. Matching is case-insensitive on word boundaries.
pub fn derive_gender_from_captions<S: AsRef<str>>(captions: &[S], lexicon: &GenderLexicon) -> Gender {
    let mut saw_male = false;
    let mut saw_female = false;
    for caption in captions {
        for word in caption
            .as_ref()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
        {
            let word = word.to_lowercase();
            saw_male |= lexicon.male.contains(&word);
            saw_female |= lexicon.female.contains(&word);
        }
    }
    match (saw_male, saw_female) {
        (true, false) => Gender::Male,
        (false, true) => Gender::Female,
        _ => Gender::Unknown,
    }
}
