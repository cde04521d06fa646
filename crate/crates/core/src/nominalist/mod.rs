//! Username suggestion: a creator that merges rule-based transformations with
//! llm variants, and a reviewer that filters, scores and ranks them.

mod creator;
mod reviewer;
mod rules;
mod store;

use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::dataset::Gender;
use crate::fuzzy::{NameIndex, ScriptChoice};
use crate::llm::LlmClient;
use crate::normalize::{detect_script, Script};

pub use creator::{create, llm_candidates, Created};
pub use reviewer::{ai_rank, filter_available, final_rank, heuristic_score, review, Filtered, Reviewed};
pub use rules::{rule_candidates, RuleId};
pub use store::{FileStore, HttpStore, MemoryStore, StoreError, UsernameStore};

pub const MIN_LEN: usize = 4;
pub const MAX_LEN: usize = 20;

static USERNAME_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[A-Za-z0-9_]{4,20}$").unwrap());

pub fn is_valid_username(value: &str) -> bool {
    USERNAME_RE.is_match(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Rule(RuleId),
    Ai,
}

#[derive(Debug, Error, PartialEq)]
pub enum NominalistError {
    #[error("no latin base could be derived from {0:?}")]
    UnresolvableName(String),
    #[error("input name is empty")]
    EmptyName,
    #[error("invalid username {0:?}")]
    InvalidUsername(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Deserialize)]
struct RawCandidate {
    value: String,
    origin: Origin,
    #[serde(default)]
    ai_score: Option<f64>,
}

/// A validated username with its scores. `final_score` is kept in sync with
/// the other two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCandidate")]
pub struct UsernameCandidate {
    value: String,
    origin: Origin,
    ai_score: Option<f64>,
    heuristic_score: f64,
    final_score: f64,
}

impl TryFrom<RawCandidate> for UsernameCandidate {
    type Error = NominalistError;

    fn try_from(raw: RawCandidate) -> Result<Self, Self::Error> {
        let mut c = Self::new(raw.value, raw.origin)?;
        if let Some(ai) = raw.ai_score {
            if !(0.0..=1.0).contains(&ai) {
                return Err(NominalistError::InvalidUsername(c.value));
            }
            c.set_ai_score(Some(ai));
        }
        Ok(c)
    }
}

impl UsernameCandidate {
    pub fn new(value: impl Into<String>, origin: Origin) -> Result<Self, NominalistError> {
        let value = value.into();
        if !is_valid_username(&value) {
            return Err(NominalistError::InvalidUsername(value));
        }
        let heuristic_score = heuristic_score(&value);
        Ok(Self {
            value,
            origin,
            ai_score: None,
            heuristic_score,
            final_score: heuristic_score,
        })
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn ai_score(&self) -> Option<f64> {
        self.ai_score
    }

    pub fn heuristic_score(&self) -> f64 {
        self.heuristic_score
    }

    pub fn final_score(&self) -> f64 {
        self.final_score
    }

    pub fn set_ai_score(&mut self, ai_score: Option<f64>) {
        self.ai_score = ai_score;
        self.final_score = match ai_score {
            Some(ai) => AI_WEIGHT * ai + HEURISTIC_WEIGHT * self.heuristic_score,
            None => self.heuristic_score,
        };
    }
}

pub const AI_WEIGHT: f64 = 0.6;
pub const HEURISTIC_WEIGHT: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationContext {
    pub input_name: String,
    #[serde(default)]
    pub transliteration: Option<String>,
    #[serde(default)]
    pub gender: Option<Gender>,
    #[serde(default)]
    pub birth_year: Option<u32>,
    pub rng_seed: u64,
}

impl GenerationContext {
    pub fn new(input_name: impl Into<String>, rng_seed: u64) -> Self {
        Self {
            input_name: input_name.into(),
            transliteration: None,
            gender: None,
            birth_year: None,
            rng_seed,
        }
    }

    pub fn with_birth_year(mut self, year: u32) -> Self {
        self.birth_year = Some(year);
        self
    }

    pub fn with_transliteration(mut self, latin: impl Into<String>) -> Self {
        self.transliteration = Some(latin.into());
        self
    }
}

/// FNV-1a over the name's bytes mixed with `base`; a stable per-name seed.
pub fn seed_for_name(name: &str, base: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ base;
    for b in name.trim().bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreFailureMode {
    /// Surface the store error.
    #[default]
    Fail,
    /// Keep every candidate and attach a warning.
    PassThrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NominalistConfig {
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
    /// Year used by year appending when the context has no birth year.
    /// `None` means the current calendar year.
    pub current_year: Option<u32>,
    pub min_candidates: usize,
    pub max_candidates: usize,
    pub ai_variants: usize,
    pub creator_temperature: f32,
    pub reviewer_temperature: f32,
    /// Largest normalized distance accepted when resolving a transliteration.
    pub resolve_max_distance: f64,
    pub store_failure: StoreFailureMode,
}

impl Default for NominalistConfig {
    fn default() -> Self {
        Self {
            prefixes: vec!["im".into(), "the".into(), "its".into()],
            suffixes: vec!["_dev".into(), "_official".into(), "_ir".into()],
            current_year: None,
            min_candidates: 10,
            max_candidates: 12,
            ai_variants: 6,
            creator_temperature: 0.8,
            reviewer_temperature: 0.3,
            resolve_max_distance: 0.25,
            store_failure: StoreFailureMode::Fail,
        }
    }
}

impl NominalistConfig {
    pub(crate) fn year(&self) -> u32 {
        use chrono::Datelike;
        self.current_year.unwrap_or_else(|| chrono::Utc::now().year() as u32)
    }
}

/// Looks `name` up in the index: an exact normalized key first, then the
/// nearest neighbour within `max_distance`.
pub fn resolve_transliteration(index: &NameIndex, name: &str, max_distance: f64) -> Option<(String, Gender)> {
    if name.trim().is_empty() {
        return None;
    }
    let script = detect_script(name);
    if let Some(rec) = index.exact(name, script).first() {
        return Some((rec.latin().to_string(), rec.gender()));
    }
    let nearest = index.top_k(name, 1, ScriptChoice::Auto).ok()?.into_iter().next()?;
    (nearest.distance <= max_distance).then(|| (nearest.record.latin().to_string(), nearest.record.gender()))
}

/// Lowercased ASCII words of `text` with diacritics stripped.
pub fn fold_words(text: &str) -> Vec<String> {
    let folded: String = text
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
        .collect();
    folded.split_whitespace().map(str::to_string).collect()
}

/// The latin base a context resolves to, plus any gender learned on the way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatinBase {
    pub words: Vec<String>,
    pub gender: Option<Gender>,
}

impl LatinBase {
    pub fn display(&self) -> String {
        self.words.join(" ")
    }

    pub fn concat(&self) -> String {
        self.words.concat()
    }
}

pub fn latin_base(ctx: &GenerationContext, index: Option<&NameIndex>, cfg: &NominalistConfig) -> Result<LatinBase, NominalistError> {
    if ctx.input_name.trim().is_empty() {
        return Err(NominalistError::EmptyName);
    }
    let mut gender = ctx.gender;
    let source = if let Some(t) = ctx.transliteration.as_deref().filter(|t| !t.trim().is_empty()) {
        t.to_string()
    } else if let Some((latin, g)) = index.and_then(|ix| resolve_transliteration(ix, &ctx.input_name, cfg.resolve_max_distance)) {
        gender = gender.or(Some(g));
        latin
    } else if detect_script(&ctx.input_name) == Script::Latin {
        ctx.input_name.clone()
    } else {
        return Err(NominalistError::UnresolvableName(ctx.input_name.clone()));
    };
    let words = fold_words(&source);
    if words.is_empty() {
        return Err(NominalistError::UnresolvableName(ctx.input_name.clone()));
    }
    Ok(LatinBase { words, gender })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Suggestions {
    pub base: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    pub candidates: Vec<UsernameCandidate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// The full creator → reviewer pipeline over shared, immutable dependencies.
#[derive(Clone)]
pub struct Nominalist {
    pub index: Arc<NameIndex>,
    pub llm: Arc<dyn LlmClient>,
    pub store: Arc<dyn UsernameStore>,
    pub config: NominalistConfig,
}

impl Nominalist {
    pub fn suggest(&self, ctx: &GenerationContext, k: usize) -> Result<Suggestions, NominalistError> {
        let created = create(ctx, Some(&self.index), &*self.llm, &self.config)?;
        let reviewed = review(created.candidates, &*self.store, &*self.llm, k, &self.config)?;
        let mut warnings = created.warnings;
        warnings.extend(reviewed.warnings);
        Ok(Suggestions {
            base: created.base.display(),
            gender: created.base.gender,
            candidates: reviewed.ranked,
            warnings,
        })
    }
}
