use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::NameRecord;
use crate::llm::{LlmClient, LlmError, LlmRequest};

const AUDIT_SYSTEM_PROMPT: &str = "You review a dataset of Persian given names, their English \
transliterations and their usual gender. For each numbered record decide whether the \
transliteration is a plausible English spelling of the Persian name and whether either name \
looks misspelled. Answer with exactly one line per record, in the same order, formatted as \
`<number>: OK` or `<number>: FLAG: <short reason>`. Output nothing else.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditSource {
    Llm,
    Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditFlag {
    pub record: NameRecord,
    pub reason: String,
    pub source: AuditSource,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    /// Flags in input order.
    pub flags: Vec<AuditFlag>,
    pub batches_total: usize,
    pub batches_done: usize,
    /// Set when the llm became unavailable and later batches were not sent.
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub batch_size: usize,
    /// Batches in flight at once.
    pub parallelism: usize,
    pub temperature: f32,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            batch_size: 25,
            parallelism: 4,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("batch_size must be at least 1")]
    InvalidBatchSize,
    #[error("llm unavailable: {reason} ({} of {} batches audited)", partial.batches_done, partial.batches_total)]
    LlmUnavailable { reason: String, partial: AuditReport },
}

#[derive(Debug, PartialEq, Eq)]
enum Verdict {
    Ok,
    Flag(String),
}

enum BatchOutcome {
    Done(Vec<AuditFlag>),
    Unavailable(String),
}

fn batch_prompt(batch: &[NameRecord]) -> String {
    let mut out = String::new();
    for (i, r) in batch.iter().enumerate() {
        let _ = writeln!(out, "{}. {} | {} | {}", i + 1, r.persian(), r.latin(), r.gender());
    }
    out
}

/// Parses one verdict per record. Lines may carry a `<n>:` / `<n>.` prefix;
/// numbered lines are matched by number, otherwise by position.
fn parse_verdicts(text: &str, expected: usize) -> Option<Vec<Verdict>> {
    let mut slots: Vec<Option<Verdict>> = (0..expected).map(|_| None).collect();
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.len() != expected {
        return None;
    }
    for (pos, line) in lines.into_iter().enumerate() {
        let digits = line.chars().take_while(char::is_ascii_digit).count();
        let (slot, rest) = if digits > 0 {
            let n: usize = line[..digits].parse().ok()?;
            let rest = line[digits..].trim_start();
            let rest = rest.strip_prefix([':', '.', ')']).unwrap_or(rest).trim_start();
            (n.checked_sub(1)?, rest)
        } else {
            (pos, line)
        };
        let verdict = if rest.eq_ignore_ascii_case("ok") {
            Verdict::Ok
        } else if rest.len() >= 4 && rest[..4].eq_ignore_ascii_case("flag") {
            let reason = rest[4..].trim_start().trim_start_matches(':').trim();
            Verdict::Flag(if reason.is_empty() { "flagged without a reason".into() } else { reason.to_string() })
        } else {
            return None;
        };
        let cell = slots.get_mut(slot)?;
        if cell.is_some() {
            return None;
        }
        *cell = Some(verdict);
    }
    slots.into_iter().collect()
}

fn audit_batch<L: LlmClient + ?Sized>(batch: &[NameRecord], llm: &L, cfg: &AuditConfig) -> BatchOutcome {
    let req = LlmRequest::new(AUDIT_SYSTEM_PROMPT, batch_prompt(batch), cfg.temperature);
    for attempt in 0..2 {
        match llm.chat_complete(&req) {
            Ok(resp) => {
                if let Some(verdicts) = parse_verdicts(&resp.text, batch.len()) {
                    let flags = batch
                        .iter()
                        .zip(verdicts)
                        .filter_map(|(record, v)| match v {
                            Verdict::Ok => None,
                            Verdict::Flag(reason) => Some(AuditFlag {
                                record: record.clone(),
                                reason,
                                source: AuditSource::Llm,
                            }),
                        })
                        .collect();
                    return BatchOutcome::Done(flags);
                }
                tracing::warn!(attempt, "unparseable audit response");
            }
            Err(LlmError::MalformedResponse(e)) => tracing::warn!(attempt, error = %e, "malformed audit response"),
            Err(e) => return BatchOutcome::Unavailable(e.to_string()),
        }
    }
    BatchOutcome::Done(
        batch
            .iter()
            .map(|record| AuditFlag {
                record: record.clone(),
                reason: "audit skipped: llm response could not be parsed after one retry".into(),
                source: AuditSource::Rule,
            })
            .collect(),
    )
}

/// Asks the llm to flag suspicious records. The dataset itself is never
/// modified; flagged records are meant for manual review.
pub fn audit_with_llm<L: LlmClient + ?Sized>(
    records: &[NameRecord],
    llm: &L,
    cfg: &AuditConfig,
) -> Result<AuditReport, AuditError> {
    if cfg.batch_size == 0 {
        return Err(AuditError::InvalidBatchSize);
    }
    let batches: Vec<&[NameRecord]> = records.chunks(cfg.batch_size).collect();
    let mut report = AuditReport {
        batches_total: batches.len(),
        ..AuditReport::default()
    };

    for group in batches.chunks(cfg.parallelism.max(1)) {
        let outcomes: Vec<BatchOutcome> = std::thread::scope(|s| {
            let handles: Vec<_> = group.iter().map(|b| s.spawn(|| audit_batch(b, llm, cfg))).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| BatchOutcome::Unavailable("audit worker panicked".into())))
                .collect()
        });
        for outcome in outcomes {
            match outcome {
                BatchOutcome::Done(flags) => {
                    report.flags.extend(flags);
                    report.batches_done += 1;
                }
                BatchOutcome::Unavailable(reason) => {
                    report.warning = Some(format!("partial audit: {reason}"));
                    return Err(AuditError::LlmUnavailable {
                        reason,
                        partial: report,
                    });
                }
            }
        }
    }
    Ok(report)
}
