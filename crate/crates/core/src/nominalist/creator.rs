use std::collections::HashSet;

use crate::fuzzy::NameIndex;
use crate::llm::{LlmClient, LlmError, LlmRequest};

use super::rules::{random_suffix_variant, rule_candidates, RuleId};
use super::{is_valid_username, latin_base, GenerationContext, LatinBase, NominalistConfig, NominalistError, Origin, UsernameCandidate};

const CREATOR_SYSTEM: &str = "You invent social media usernames. Every username must be 4 to 20 characters \
long and use only letters, digits and underscores. Keep them professionally appropriate. \
Answer with one username per line and nothing else.";

/// Output of [`create`].
#[derive(Debug, Clone, PartialEq)]
pub struct Created {
    pub base: LatinBase,
    pub candidates: Vec<UsernameCandidate>,
    pub warnings: Vec<String>,
}

fn creator_prompt(base: &LatinBase, count: usize) -> String {
    let mut prompt = format!("Name: {}\n", base.display());
    if let Some(g) = base.gender {
        prompt.push_str(&format!("Gender: {}\n", g.as_str()));
    }
    prompt.push_str(&format!("Suggest {count} creative, distinct usernames based on this name."));
    prompt
}

/// Strips list numbering, bullets and quoting from one response line.
pub(crate) fn clean_line(line: &str) -> &str {
    let mut s = line.trim();
    let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 && s[digits..].starts_with(['.', ')', ':']) {
        s = s[digits + 1..].trim_start();
    }
    s = s.trim_start_matches(['-', '*', '•']).trim();
    s.trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | ',')).trim_start_matches('@')
}

fn try_llm_candidates(base: &LatinBase, llm: &dyn LlmClient, cfg: &NominalistConfig) -> Result<Vec<UsernameCandidate>, LlmError> {
    let req = LlmRequest::new(CREATOR_SYSTEM, creator_prompt(base, cfg.ai_variants), cfg.creator_temperature);
    let resp = llm.chat_complete(&req)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in resp.text.lines() {
        let value = clean_line(line);
        if value.is_empty() {
            continue;
        }
        if !is_valid_username(value) {
            tracing::debug!(value, "dropping invalid llm username");
            continue;
        }
        if seen.insert(value.to_lowercase()) {
            out.push(UsernameCandidate::new(value, Origin::Ai).expect("validated above"));
        }
        if out.len() == cfg.ai_variants {
            break;
        }
    }
    Ok(out)
}

/// Asks the llm for creative variants. Failure yields an empty list.
pub fn llm_candidates(base: &LatinBase, llm: &dyn LlmClient, cfg: &NominalistConfig) -> Vec<UsernameCandidate> {
    try_llm_candidates(base, llm, cfg).unwrap_or_else(|e| {
        tracing::warn!(error = %e, "llm username generation failed");
        Vec::new()
    })
}

/// Runs the rule and llm pathways concurrently and merges them into
/// `min_candidates..=max_candidates` unique usernames, rules first.
pub fn create(
    ctx: &GenerationContext,
    index: Option<&NameIndex>,
    llm: &dyn LlmClient,
    cfg: &NominalistConfig,
) -> Result<Created, NominalistError> {
    let base = latin_base(ctx, index, cfg)?;
    let (rules, ai) = std::thread::scope(|s| {
        let ai = s.spawn(|| try_llm_candidates(&base, llm, cfg));
        let rules = rule_candidates(&base, ctx.rng_seed, ctx.birth_year, cfg);
        (rules, ai.join().expect("llm pathway panicked"))
    });
    let mut warnings = Vec::new();
    let ai = ai.unwrap_or_else(|e| {
        tracing::warn!(error = %e, "llm username generation failed");
        warnings.push(format!("ai generation unavailable: {e}"));
        Vec::new()
    });

    let mut seen = HashSet::new();
    let mut merged: Vec<UsernameCandidate> = rules
        .into_iter()
        .chain(ai)
        .filter(|c| seen.insert(c.value().to_lowercase()))
        .collect();

    while merged.len() > cfg.max_candidates {
        match merged.iter().rposition(|c| c.origin() != Origin::Ai) {
            Some(i) => merged.remove(i),
            None => merged.pop().expect("non-empty"),
        };
    }

    let mut stream = 1000u64;
    while merged.len() < cfg.min_candidates {
        let value = random_suffix_variant(&base, ctx.rng_seed, stream);
        stream += 1;
        if is_valid_username(&value) && seen.insert(value.to_lowercase()) {
            merged.push(UsernameCandidate::new(value, Origin::Rule(RuleId::RandomSuffix)).expect("validated above"));
        }
        if stream > 1000 + 10_000 {
            break;
        }
    }
    Ok(Created {
        base,
        candidates: merged,
        warnings,
    })
}
