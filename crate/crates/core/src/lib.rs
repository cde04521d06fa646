//! Persian name tooling: normalization, dataset curation, fuzzy lookup,
//! probabilistic gender inference and username suggestion.

pub mod dataset;
pub mod fuzzy;
pub mod image;
pub mod inference;
pub mod llm;
pub mod nominalist;
pub mod normalize;

pub use dataset::{Gender, NameRecord};
pub use fuzzy::{NameIndex, Neighbor, ScriptChoice};
pub use inference::{FusionConfig, GenderEstimate};
pub use normalize::{normalize_latin, normalize_persian, NormalizedText};
