//! A deterministic stand-in for a chat model, answering the creator, reviewer
//! and audit prompts in the formats they expect.

use onoma::llm::{LlmError, LlmRequest, MockLlm};

fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn creator_reply(user: &str) -> String {
    let name = user
        .lines()
        .find_map(|l| l.strip_prefix("Name:"))
        .unwrap_or("user")
        .trim();
    let stem: String = name.chars().filter(char::is_ascii_alphanumeric).take(12).collect();
    let stem = if stem.is_empty() { "user".to_string() } else { stem.to_lowercase() };
    [
        format!("{stem}_art"),
        format!("{stem}_hq"),
        format!("real_{stem}"),
        format!("{stem}_lab"),
        format!("hey{stem}"),
        format!("{stem}_writes"),
    ]
    .join("\n")
}

fn reviewer_reply(user: &str) -> String {
    user.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|name| {
            let h = fnv(name);
            let scores: Vec<String> = (0..5)
                .map(|i| format!("{:.2}", ((h >> (i * 8)) & 0xff) as f64 / 255.0))
                .collect();
            format!("{name}: {}", scores.join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn audit_reply(user: &str) -> String {
    user.lines()
        .filter_map(|l| l.split_once('.').map(|(n, _)| n.trim()))
        .filter(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()))
        .map(|n| format!("{n}: OK"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn respond(req: &LlmRequest) -> Result<String, LlmError> {
    let system = req.system_prompt.to_lowercase();
    Ok(if system.contains("invent") {
        creator_reply(&req.user_prompt)
    } else if system.contains("rate usernames") {
        reviewer_reply(&req.user_prompt)
    } else if system.contains("dataset") {
        audit_reply(&req.user_prompt)
    } else {
        String::new()
    })
}

pub fn echo_llm() -> MockLlm {
    MockLlm::new(respond)
}
