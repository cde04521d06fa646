//! Edit distances and top-K nearest-name search.

mod distance;
mod index;

pub use distance::{levenshtein, levenshtein_chars, normalized_levenshtein};
pub use index::{IndexError, NameIndex, Neighbor, ScriptChoice, INDEX_FORMAT_VERSION, INDEX_MAGIC};
