use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{is_valid_username, LatinBase, NominalistConfig, Origin, UsernameCandidate, MAX_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    UnderscoreInsertion,
    NumericSuffix,
    YearAppend,
    DotNotation,
    Prefix,
    Suffix,
    CaseNormalization,
    SpaceRemoval,
    RandomSuffix,
}

impl RuleId {
    pub const ALL: [RuleId; 9] = [
        RuleId::UnderscoreInsertion,
        RuleId::NumericSuffix,
        RuleId::YearAppend,
        RuleId::DotNotation,
        RuleId::Prefix,
        RuleId::Suffix,
        RuleId::CaseNormalization,
        RuleId::SpaceRemoval,
        RuleId::RandomSuffix,
    ];

    fn stream(self) -> u64 {
        self as u64
    }
}

const RANDOM_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Cuts `s` so that `reserve` more characters still fit the length limit.
fn fit(s: &str, reserve: usize) -> &str {
    let room = MAX_LEN.saturating_sub(reserve);
    &s[..s.len().min(room)]
}

fn random_suffix(concat: &str, rng: &mut ChaCha8Rng) -> String {
    let tail: String = (0..3)
        .map(|_| RANDOM_ALPHABET[rng.random_range(0..RANDOM_ALPHABET.len())] as char)
        .collect();
    format!("{}{tail}", fit(concat, 3))
}

pub(crate) fn random_suffix_variant(base: &LatinBase, seed: u64, stream: u64) -> String {
    random_suffix(&base.concat(), &mut rng_for(seed, stream))
}

fn apply(rule: RuleId, base: &LatinBase, seed: u64, birth_year: Option<u32>, cfg: &NominalistConfig) -> Option<String> {
    let words = &base.words;
    let concat = base.concat();
    let mut rng = rng_for(seed, rule.stream());
    let out = match rule {
        RuleId::UnderscoreInsertion => {
            if words.len() > 1 {
                words.join("_")
            } else {
                let w = fit(&concat, 1);
                let mid = w.len().div_ceil(2);
                format!("{}_{}", &w[..mid], &w[mid..])
            }
        }
        RuleId::NumericSuffix => {
            let n: u32 = rng.random_range(0..100);
            format!("{}{n:02}", fit(&concat, 2))
        }
        RuleId::YearAppend => {
            let year = birth_year.unwrap_or_else(|| cfg.year());
            let year = year.to_string();
            format!("{}{year}", fit(&concat, year.len()))
        }
        RuleId::DotNotation => {
            let dotted = if words.len() > 1 {
                format!("{}.{}", words[0], words[words.len() - 1])
            } else {
                format!("{}.{}", &concat[..1], concat)
            };
            dotted.replace('.', "_")
        }
        RuleId::Prefix => {
            if cfg.prefixes.is_empty() {
                return None;
            }
            let p = &cfg.prefixes[rng.random_range(0..cfg.prefixes.len())];
            format!("{p}{}", fit(&concat, p.len()))
        }
        RuleId::Suffix => {
            if cfg.suffixes.is_empty() {
                return None;
            }
            let s = &cfg.suffixes[rng.random_range(0..cfg.suffixes.len())];
            format!("{}{s}", fit(&concat, s.len()))
        }
        RuleId::CaseNormalization => words[0].clone(),
        RuleId::SpaceRemoval => concat,
        RuleId::RandomSuffix => random_suffix(&concat, &mut rng),
    };
    let out = if out.len() > MAX_LEN { out[..MAX_LEN].trim_end_matches('_').to_string() } else { out };
    is_valid_username(&out).then_some(out)
}

/// Applies the nine rules in order; invalid and duplicate outputs are dropped.
pub fn rule_candidates(base: &LatinBase, seed: u64, birth_year: Option<u32>, cfg: &NominalistConfig) -> Vec<UsernameCandidate> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for rule in RuleId::ALL {
        let Some(value) = apply(rule, base, seed, birth_year, cfg) else {
            tracing::debug!(?rule, "rule produced no valid username");
            continue;
        };
        if seen.insert(value.to_lowercase()) {
            out.push(UsernameCandidate::new(value, Origin::Rule(rule)).expect("validated above"));
        }
    }
    out
}
