//! Canonicalization of Perso-Arabic and Latin name strings.
//!
//! Persian text is NFC-composed, passed through a variant-mapping table
//! (Arabic yeh/kaf to their Persian forms, heh variants, digit convention,
//! tatweel removal), stripped of harakat and whitespace-collapsed. ZWNJ
//! (U+200C) is kept: it separates the parts of compound names.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::sync::LazyLock;

use serde::Serialize;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// The mapping table shipped with the crate.
pub const DEFAULT_CHAR_MAP: &str = include_str!("../data/char_map.tsv");

static DEFAULT_NORMALIZER: LazyLock<Normalizer> = LazyLock::new(|| {
    Normalizer::from_table(DEFAULT_CHAR_MAP.as_bytes()).expect("bundled char map is valid")
});

/// A string that has gone through one of the normalizers in this module.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Length in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error)]
pub enum CharMapError {
    #[error("char map line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("char map: {0:?} is both a source and a target")]
    Chained(char),
    #[error("char map: {0}")]
    Io(#[from] std::io::Error),
}

/// Table-driven Perso-Arabic normalizer.
#[derive(Debug, Clone)]
pub struct Normalizer {
    map: HashMap<char, Option<char>>,
}

impl Default for Normalizer {
    fn default() -> Self {
        DEFAULT_NORMALIZER.clone()
    }
}

impl Normalizer {
    /// Parses a two-column table: `source<TAB>target`, codepoints written as
    /// `U+XXXX` or as the literal character. An empty target deletes the
    /// source. Blank lines and `#` comments are ignored.
    pub fn from_table<R: BufRead>(reader: R) -> Result<Self, CharMapError> {
        let mut map = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = line.splitn(2, ['\t', ',']);
            let src = cols.next().unwrap_or_default().trim();
            let dst = cols.next().unwrap_or_default().trim();
            let src = parse_codepoint(src).ok_or_else(|| CharMapError::Syntax {
                line: lineno,
                reason: format!("bad source codepoint {src:?}"),
            })?;
            let dst = if dst.is_empty() {
                None
            } else {
                Some(parse_codepoint(dst).ok_or_else(|| CharMapError::Syntax {
                    line: lineno,
                    reason: format!("bad target codepoint {dst:?}"),
                })?)
            };
            map.insert(src, dst);
        }
        // A single pass must reach a fixed point.
        for target in map.values().flatten() {
            if map.contains_key(target) {
                return Err(CharMapError::Chained(*target));
            }
        }
        Ok(Self { map })
    }

    /// Extends this normalizer with the entries of another table.
    pub fn extend_with<R: BufRead>(&mut self, reader: R) -> Result<(), CharMapError> {
        let extra = Self::from_table(reader)?;
        let mut merged = self.map.clone();
        merged.extend(extra.map);
        for target in merged.values().flatten() {
            if merged.contains_key(target) {
                return Err(CharMapError::Chained(*target));
            }
        }
        self.map = merged;
        Ok(())
    }

    pub fn normalize(&self, text: &str) -> NormalizedText {
        let mapped: String = text
            .nfc()
            .filter(|c| !is_harakat(*c))
            .filter_map(|c| match self.map.get(&c) {
                Some(target) => *target,
                None => Some(c),
            })
            .collect();
        NormalizedText(collapse_whitespace(mapped.nfc()))
    }
}

fn parse_codepoint(s: &str) -> Option<char> {
    let hex = s
        .strip_prefix("U+")
        .or_else(|| s.strip_prefix("u+"))
        .or_else(|| s.strip_prefix("0x"));
    match hex {
        Some(hex) => u32::from_str_radix(hex, 16).ok().and_then(char::from_u32),
        None => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Some(c),
                _ => None,
            }
        }
    }
}

/// Arabic combining vowel marks and related signs (tashkeel).
fn is_harakat(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{065F}' | '\u{0670}' | '\u{06D6}'..='\u{06DC}' | '\u{06DF}'..='\u{06E4}' | '\u{06E7}' | '\u{06E8}' | '\u{06EA}'..='\u{06ED}')
}

fn collapse_whitespace(chars: impl Iterator<Item = char>) -> String {
    let mut out = String::new();
    let mut pending_space = false;
    for c in chars {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

/// Normalizes Persian text with the bundled mapping table.
pub fn normalize_persian(text: &str) -> NormalizedText {
    DEFAULT_NORMALIZER.normalize(text)
}

/// Lowercases, NFC-composes and whitespace-collapses Latin text.
pub fn normalize_latin(text: &str) -> NormalizedText {
    let lowered: String = text.nfc().flat_map(char::to_lowercase).collect();
    NormalizedText(collapse_whitespace(lowered.nfc()))
}

/// Which script a query is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    Persian,
    Latin,
}

fn is_arabic_block(c: char) -> bool {
    matches!(c, '\u{0600}'..='\u{06FF}' | '\u{0750}'..='\u{077F}' | '\u{08A0}'..='\u{08FF}' | '\u{FB50}'..='\u{FDFF}' | '\u{FE70}'..='\u{FEFF}')
}

/// Picks the script by the dominant Unicode block among alphabetic characters.
/// Ties (including text with no letters) resolve to Latin.
pub fn detect_script(text: &str) -> Script {
    let (mut arabic, mut other) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        if is_arabic_block(c) {
            arabic += 1;
        } else {
            other += 1;
        }
    }
    if arabic > other {
        Script::Persian
    } else {
        Script::Latin
    }
}

/// Normalizes `text` with the normalizer matching `script`.
pub fn normalize_for(script: Script, text: &str) -> NormalizedText {
    match script {
        Script::Persian => normalize_persian(text),
        Script::Latin => normalize_latin(text),
    }
}
