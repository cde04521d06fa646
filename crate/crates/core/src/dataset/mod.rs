//! Name-gender-transliteration records: loading, merging, auditing and
//! summary statistics.

mod audit;
mod load;
mod stats;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::{normalize_latin, normalize_persian, NormalizedText};

pub use audit::{audit_with_llm, AuditConfig, AuditError, AuditFlag, AuditReport, AuditSource};
pub use load::{load_records, parse_records, ColumnNames, Format, LoadOptions, Loaded, RowError};
pub use stats::{compute_stats, CharCount, CharFrequency, DatasetStats, ScriptFrequency};

/// The bundled desk-scale sample (208 records).
pub const BUNDLED_SAMPLE_CSV: &str = include_str!("../../data/sample.csv");

static LATIN_PATTERN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[a-z][a-z '\-]*$").expect("valid regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    // Declaration order is the tie-break order: female sorts first.
    Female,
    Male,
}

impl Gender {
    pub fn other(self) -> Self {
        match self {
            Gender::Female => Gender::Male,
            Gender::Male => Gender::Female,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid gender value {0:?}")]
pub struct ParseGenderError(pub String);

impl FromStr for Gender {
    type Err = ParseGenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            _ => Err(ParseGenderError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("empty persian name")]
    EmptyPersian,
    #[error("empty transliteration")]
    EmptyLatin,
    #[error("transliteration {0:?} has characters outside [a-z '-]")]
    InvalidLatin(String),
}

/// One (Persian name, English transliteration, gender) tuple.
///
/// Field order gives the canonical sort: persian, then latin, then gender.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NameRecord {
    persian: NormalizedText,
    latin: NormalizedText,
    gender: Gender,
}

impl NameRecord {
    /// Normalizes both name fields and validates the record.
    pub fn new(persian: &str, latin: &str, gender: Gender) -> Result<Self, RecordError> {
        let persian = normalize_persian(persian);
        let latin = normalize_latin(latin);
        if persian.is_empty() {
            return Err(RecordError::EmptyPersian);
        }
        if latin.is_empty() {
            return Err(RecordError::EmptyLatin);
        }
        if !LATIN_PATTERN.is_match(latin.as_str()) {
            return Err(RecordError::InvalidLatin(latin.into_string()));
        }
        Ok(Self {
            persian,
            latin,
            gender,
        })
    }

    pub fn persian(&self) -> &NormalizedText {
        &self.persian
    }

    pub fn latin(&self) -> &NormalizedText {
        &self.latin
    }

    pub fn gender(&self) -> Gender {
        self.gender
    }
}

#[derive(Deserialize)]
struct RawRecord {
    persian: String,
    latin: String,
    gender: Gender,
}

impl<'de> Deserialize<'de> for NameRecord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawRecord::deserialize(deserializer)?;
        NameRecord::new(&raw.persian, &raw.latin, raw.gender).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: input is not valid UTF-8")]
    Encoding { line: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Merges collections, keeping each (persian, latin, gender) triple once.
/// Output is sorted by persian, then latin, then gender. Records that share
/// persian and latin but differ in gender are both kept.
pub fn merge_and_dedupe<I, C>(collections: I) -> Vec<NameRecord>
where
    I: IntoIterator<Item = C>,
    C: IntoIterator<Item = NameRecord>,
{
    collections
        .into_iter()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// (persian, latin) pairs that appear with both genders.
pub fn gender_conflicts(records: &[NameRecord]) -> Vec<(NormalizedText, NormalizedText)> {
    let mut seen = std::collections::BTreeMap::<(&NormalizedText, &NormalizedText), u8>::new();
    for r in records {
        let bit = match r.gender {
            Gender::Female => 1,
            Gender::Male => 2,
        };
        *seen.entry((&r.persian, &r.latin)).or_default() |= bit;
    }
    seen.into_iter()
        .filter(|(_, bits)| *bits == 3)
        .map(|((p, l), _)| (p.clone(), l.clone()))
        .collect()
}

/// Parses the bundled sample.
pub fn bundled_sample() -> Vec<NameRecord> {
    parse_records(BUNDLED_SAMPLE_CSV.as_bytes(), Format::Csv, &LoadOptions::strict())
        .expect("bundled sample parses")
        .records
}
