use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::llm::{LlmClient, LlmError, LlmRequest};

use super::creator::clean_line;
use super::{NominalistConfig, StoreError, StoreFailureMode, UsernameCandidate, UsernameStore};

const REVIEWER_SYSTEM: &str = "You rate usernames. For each username give five scores between 0 and 1: \
memorability, professional appearance, typing ease, uniqueness and overall appeal. \
Answer with one line per username in the form `username: m p t u o`.";

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub kept: Vec<UsernameCandidate>,
    pub warning: Option<String>,
}

/// Drops candidates already present in `store`, keeping order.
pub fn filter_available(
    candidates: Vec<UsernameCandidate>,
    store: &dyn UsernameStore,
    mode: StoreFailureMode,
) -> Result<Filtered, StoreError> {
    let mut kept = Vec::with_capacity(candidates.len());
    for c in &candidates {
        match store.exists(c.value()) {
            Ok(true) => {}
            Ok(false) => kept.push(c.clone()),
            Err(e) => match mode {
                StoreFailureMode::Fail => return Err(e),
                StoreFailureMode::PassThrough => {
                    tracing::warn!(error = %e, "username store unavailable; skipping availability check");
                    return Ok(Filtered {
                        kept: candidates,
                        warning: Some(format!("availability not checked: {e}")),
                    });
                }
            },
        }
    }
    Ok(Filtered { kept, warning: None })
}

fn parse_scores(rest: &str) -> Option<f64> {
    let nums: Vec<f64> = rest
        .split(|c: char| c.is_whitespace() || c == ',' || c == '/' || c == ';')
        .filter(|t| !t.is_empty())
        .map(str::parse::<f64>)
        .collect::<Result<_, _>>()
        .ok()?;
    if nums.len() != 5 || nums.iter().any(|n| !(0.0..=1.0).contains(n)) {
        return None;
    }
    Some(nums.iter().sum::<f64>() / 5.0)
}

fn try_ai_rank(values: &[&str], llm: &dyn LlmClient, cfg: &NominalistConfig) -> Result<BTreeMap<String, f64>, LlmError> {
    let listing: Vec<&str> = values.to_vec();
    let req = LlmRequest::new(REVIEWER_SYSTEM, listing.join("\n"), cfg.reviewer_temperature);
    let resp = llm.chat_complete(&req)?;
    let wanted: HashMap<String, &str> = values.iter().map(|v| (v.to_lowercase(), *v)).collect();
    let mut scores = BTreeMap::new();
    for line in resp.text.lines() {
        let Some((name, rest)) = line.split_once(':') else {
            continue;
        };
        let Some(&value) = wanted.get(&clean_line(name).to_lowercase()) else {
            continue;
        };
        if scores.contains_key(value) {
            continue;
        }
        if let Some(score) = parse_scores(rest) {
            scores.insert(value.to_string(), score);
        }
    }
    Ok(scores)
}

/// Scores every candidate with one llm call; the value is the mean of the
/// five dimensions. Unparseable entries are absent. Failure yields an empty map.
pub fn ai_rank(values: &[&str], llm: &dyn LlmClient, cfg: &NominalistConfig) -> BTreeMap<String, f64> {
    if values.is_empty() {
        return BTreeMap::new();
    }
    try_ai_rank(values, llm, cfg).unwrap_or_else(|e| {
        tracing::warn!(error = %e, "llm ranking failed");
        BTreeMap::new()
    })
}

fn length_score(len: usize) -> f64 {
    match len {
        6..=15 => 1.0,
        0..=5 => (len as f64 - 4.0).max(0.0) / 2.0,
        _ => ((20.0 - len as f64) / 5.0).max(0.0),
    }
}

fn digit_score(value: &str) -> f64 {
    let digits = value.chars().filter(char::is_ascii_digit).count();
    let trailing = value.chars().rev().take_while(char::is_ascii_digit).count();
    match digits {
        0 => 1.0,
        1 | 2 if trailing == digits => 0.6,
        _ => 0.2,
    }
}

fn readability_score(value: &str) -> f64 {
    let mut score = 1.0;
    if value.contains("__") {
        score -= 0.4;
    }
    if value.starts_with('_') || value.ends_with('_') {
        score -= 0.3;
    }
    if value.starts_with(|c: char| c.is_ascii_digit()) {
        score -= 0.3;
    }
    f64::max(score, 0.0)
}

/// Weighted length, digit and readability sub-scores, in [0, 1].
pub fn heuristic_score(value: &str) -> f64 {
    let s = 0.4 * length_score(value.chars().count()) + 0.3 * digit_score(value) + 0.3 * readability_score(value);
    s.clamp(0.0, 1.0)
}

/// Sorts by final score descending, ties by value ascending, and keeps `k`.
pub fn final_rank(mut candidates: Vec<UsernameCandidate>, k: usize) -> Vec<UsernameCandidate> {
    candidates.sort_by(|a, b| {
        b.final_score()
            .partial_cmp(&a.final_score())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.value().cmp(b.value()))
    });
    candidates.truncate(k);
    candidates
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reviewed {
    pub ranked: Vec<UsernameCandidate>,
    pub warnings: Vec<String>,
}

/// Filter, score and rank, in that order.
pub fn review(
    candidates: Vec<UsernameCandidate>,
    store: &dyn UsernameStore,
    llm: &dyn LlmClient,
    k: usize,
    cfg: &NominalistConfig,
) -> Result<Reviewed, StoreError> {
    let Filtered { mut kept, warning } = filter_available(candidates, store, cfg.store_failure)?;
    let mut warnings: Vec<String> = warning.into_iter().collect();
    if !kept.is_empty() {
        let values: Vec<&str> = kept.iter().map(UsernameCandidate::value).collect();
        match try_ai_rank(&values, llm, cfg) {
            Ok(scores) => {
                for c in &mut kept {
                    let s = scores.get(c.value()).copied();
                    c.set_ai_score(s);
                }
            }
            Err(e) => {
                tracing::warn!(error = %e, "llm ranking failed");
                warnings.push(format!("ai ranking unavailable: {e}"));
            }
        }
    }
    Ok(Reviewed {
        ranked: final_rank(kept, k),
        warnings,
    })
}
