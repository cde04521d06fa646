use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Gender, NameRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharCount {
    #[serde(rename = "char")]
    pub ch: char,
    pub count: usize,
}

/// Character occurrence counts for one gender, one list per script. Sorted
/// by descending count, ties by ascending codepoint.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptFrequency {
    pub persian: Vec<CharCount>,
    pub latin: Vec<CharCount>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharFrequency {
    pub male: ScriptFrequency,
    pub female: ScriptFrequency,
}

impl CharFrequency {
    pub fn for_gender(&self, gender: Gender) -> &ScriptFrequency {
        match gender {
            Gender::Male => &self.male,
            Gender::Female => &self.female,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub male: usize,
    pub female: usize,
    pub male_fraction: f64,
    pub female_fraction: f64,
    pub persian_length_histogram: BTreeMap<usize, usize>,
    pub latin_length_histogram: BTreeMap<usize, usize>,
    pub persian_length_mean: f64,
    pub latin_length_mean: f64,
    pub char_frequency: CharFrequency,
}

impl DatasetStats {
    pub fn top_chars(&self, gender: Gender, persian: bool, n: usize) -> &[CharCount] {
        let freq = self.char_frequency.for_gender(gender);
        let list = if persian { &freq.persian } else { &freq.latin };
        &list[..n.min(list.len())]
    }

    /// Human-readable report with the top `top_n` characters per gender.
    pub fn render_text(&self, top_n: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "records:        {}", self.total);
        let _ = writeln!(out, "male:           {} ({:.2}%)", self.male, 100.0 * self.male_fraction);
        let _ = writeln!(out, "female:         {} ({:.2}%)", self.female, 100.0 * self.female_fraction);
        let _ = writeln!(out, "persian length: mean {:.2}", self.persian_length_mean);
        let _ = writeln!(out, "latin length:   mean {:.2}", self.latin_length_mean);
        for (label, hist) in [("persian", &self.persian_length_histogram), ("latin", &self.latin_length_histogram)] {
            let _ = writeln!(out, "\n{label} length histogram:");
            for (len, count) in hist {
                let _ = writeln!(out, "  {len:>3} {count}");
            }
        }
        for gender in [Gender::Male, Gender::Female] {
            let _ = writeln!(out, "\ntop {top_n} characters ({gender}):");
            let persian = self.top_chars(gender, true, top_n);
            let latin = self.top_chars(gender, false, top_n);
            for i in 0..persian.len().max(latin.len()) {
                let cell = |c: Option<&CharCount>| c.map_or_else(String::new, |c| format!("{} {}", c.ch, c.count));
                let _ = writeln!(out, "  {:<14} {}", cell(persian.get(i)), cell(latin.get(i)));
            }
        }
        out
    }
}

fn sorted_counts(counts: HashMap<char, usize>) -> Vec<CharCount> {
    let mut list: Vec<CharCount> = counts.into_iter().map(|(ch, count)| CharCount { ch, count }).collect();
    list.sort_by(|a, b| b.count.cmp(&a.count).then(a.ch.cmp(&b.ch)));
    list
}

/// Lengths are Unicode scalar values of the normalized fields; every character
/// occurrence is counted, spaces and ZWNJ included.
pub fn compute_stats(records: &[NameRecord]) -> Result<DatasetStats, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let mut persian_hist = BTreeMap::new();
    let mut latin_hist = BTreeMap::new();
    let (mut persian_sum, mut latin_sum, mut male) = (0usize, 0usize, 0usize);
    let mut counts: [[HashMap<char, usize>; 2]; 2] = Default::default();

    for r in records {
        let gi = match r.gender() {
            Gender::Male => {
                male += 1;
                0
            }
            Gender::Female => 1,
        };
        for (si, text) in [r.persian().as_str(), r.latin().as_str()].into_iter().enumerate() {
            let mut len = 0;
            for c in text.chars() {
                *counts[gi][si].entry(c).or_default() += 1;
                len += 1;
            }
            if si == 0 {
                persian_sum += len;
                *persian_hist.entry(len).or_default() += 1;
            } else {
                latin_sum += len;
                *latin_hist.entry(len).or_default() += 1;
            }
        }
    }

    let total = records.len();
    let [[male_p, male_l], [female_p, female_l]] = counts;
    Ok(DatasetStats {
        total,
        male,
        female: total - male,
        male_fraction: male as f64 / total as f64,
        female_fraction: (total - male) as f64 / total as f64,
        persian_length_histogram: persian_hist,
        latin_length_histogram: latin_hist,
        persian_length_mean: persian_sum as f64 / total as f64,
        latin_length_mean: latin_sum as f64 / total as f64,
        char_frequency: CharFrequency {
            male: ScriptFrequency {
                persian: sorted_counts(male_p),
                latin: sorted_counts(male_l),
            },
            female: ScriptFrequency {
                persian: sorted_counts(female_p),
                latin: sorted_counts(female_l),
            },
        },
    })
}
