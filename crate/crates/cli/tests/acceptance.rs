//! Acceptance gate: runs every criterion at its pinned tolerance and prints
//! one PASS/FAIL line each. Exits non-zero when a criterion that could run
//! failed.
//!
//! The full-dataset criterion needs the public release on disk; point
//! `PNGT26K_PATH` at it. Without the file that criterion is reported as
//! FAIL (not run) and does not change the exit status.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use onoma::dataset::{bundled_sample, compute_stats, load_records, CharCount, Format, LoadOptions};
use onoma::fuzzy::{levenshtein, normalized_levenshtein};
use onoma::inference::{fuse, EstimateSource, GenderEstimate, ImageUnavailable};
use onoma::llm::{DisabledLlm, LlmClient};
use onoma::nominalist::{create, review, GenerationContext, MemoryStore, NominalistConfig, UsernameCandidate};
use onoma::{FusionConfig, Gender, NameIndex, NameRecord, ScriptChoice};
use onoma_cli::config::LlmProvider;
use onoma_cli::{AppConfig, Services};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

enum Check {
    Fail(String),
    NotRun(String),
}

type Outcome = Result<String, Check>;

fn fail<T>(msg: impl Into<String>) -> Result<T, Check> {
    Err(Check::Fail(msg.into()))
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return fail(format!($($arg)+));
        }
    };
}

fn within_budget(start: Instant, budget: Duration, detail: String) -> Outcome {
    let took = start.elapsed();
    ensure!(took < budget, "took {took:.2?}, budget {budget:?}");
    Ok(format!("{detail}; {took:.2?}"))
}

// Independent full-matrix edit distance.
fn dp_distance(a: &[char], b: &[char]) -> usize {
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        m[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            m[i][j] = sub.min(m[i - 1][j] + 1).min(m[i][j - 1] + 1);
        }
    }
    m[a.len()][b.len()]
}

const PERSIAN_LETTERS: &[char] = &['ا', 'ب', 'د', 'ر', 'س', 'م', 'ن', 'ه', 'ی', 'ک', 'ت', 'ز', 'ش', 'ف'];

// ---------------------------------------------------------------- C1

const MALE_TOP: [(char, usize); 5] = [('ا', 15475), ('ی', 12076), ('م', 9288), ('ر', 9118), ('د', 7055)];
const FEMALE_TOP: [(char, usize); 5] = [('ا', 8204), ('ی', 5481), ('ن', 4773), ('ر', 4418), ('ه', 4026)];

fn dataset_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("PNGT26K_PATH") {
        return Some(PathBuf::from(p));
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    ["data/PNGT-26K.csv", "data/pngt26k.csv", "data/PNGT-26K.jsonl"]
        .iter()
        .map(|p| root.join(p))
        .find(|p| p.exists())
}

fn compare_top(label: &str, got: &[CharCount], want: &[(char, usize); 5], notes: &mut Vec<String>) -> Result<(), Check> {
    ensure!(got.len() >= 5, "{label}: fewer than 5 characters");
    for (g, (ch, n)) in got.iter().zip(want) {
        ensure!(g.ch == *ch, "{label}: order {:?}, expected {:?}", got.iter().map(|c| c.ch).collect::<String>(), want.iter().map(|w| w.0).collect::<String>());
        if g.count != *n {
            let rel = (g.count as f64 - *n as f64).abs() / *n as f64;
            ensure!(rel <= 0.02, "{label}: {ch} count {} vs {n} ({:.2}% off)", g.count, rel * 100.0);
            notes.push(format!("{label} {ch}: {} vs {n}", g.count));
        }
    }
    Ok(())
}

fn c1_full_dataset() -> Outcome {
    let Some(path) = dataset_path().filter(|p| p.exists()) else {
        return Err(Check::NotRun("dataset file not present; set PNGT26K_PATH to the released file".into()));
    };
    let start = Instant::now();
    let loaded = load_records(&path, Format::from_path(&path), &LoadOptions::default()).map_err(|e| Check::Fail(e.to_string()))?;
    let stats = compute_stats(&loaded.records).map_err(|e| Check::Fail(e.to_string()))?;
    ensure!((stats.male_fraction - 0.65).abs() <= 0.01, "male fraction {:.4}", stats.male_fraction);
    ensure!((stats.female_fraction - 0.35).abs() <= 0.01, "female fraction {:.4}", stats.female_fraction);
    ensure!((stats.persian_length_mean - 6.30).abs() <= 0.05, "persian mean length {:.3}", stats.persian_length_mean);
    ensure!((stats.latin_length_mean - 7.97).abs() <= 0.05, "latin mean length {:.3}", stats.latin_length_mean);
    let mut notes = Vec::new();
    compare_top("male", stats.top_chars(Gender::Male, true, 5), &MALE_TOP, &mut notes)?;
    compare_top("female", stats.top_chars(Gender::Female, true, 5), &FEMALE_TOP, &mut notes)?;
    for n in &notes {
        eprintln!("      count discrepancy (within 2%): {n}");
    }
    within_budget(
        start,
        Duration::from_secs(10),
        format!("{} records, {} count discrepancies", stats.total, notes.len()),
    )
}

// ---------------------------------------------------------------- C2

fn c2_sample_stats() -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = onoma_cli::run(["onoma", "stats", "--format", "json"], &mut out, &mut err);
    ensure!(code == 0, "stats exited {code}: {}", String::from_utf8_lossy(&err));
    let got: Value = serde_json::from_slice(&out).map_err(|e| Check::Fail(e.to_string()))?;
    let expected_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/sample_expected_stats.json");
    let expected: Value = serde_json::from_str(&std::fs::read_to_string(&expected_path).map_err(|e| Check::Fail(e.to_string()))?)
        .map_err(|e| Check::Fail(e.to_string()))?;
    if got != expected {
        let keys: Vec<&String> = expected
            .as_object()
            .unwrap()
            .iter()
            .filter(|(k, v)| got.get(k.as_str()) != Some(v))
            .map(|(k, _)| k)
            .collect();
        return fail(format!("mismatch in {keys:?}"));
    }
    within_budget(start, Duration::from_secs(1), format!("{} records, exact match", got["total"]))
}

// ---------------------------------------------------------------- C3

fn random_string(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(0..=30);
    let pool = rng.random_range(0..3);
    (0..len)
        .map(|_| match pool {
            0 => (b'a' + rng.random_range(0..5)) as char,
            1 => PERSIAN_LETTERS[rng.random_range(0..PERSIAN_LETTERS.len())],
            _ => loop {
                if let Some(c) = char::from_u32(rng.random_range(0..0x11_0000)) {
                    break c;
                }
            },
        })
        .collect()
}

fn c3_distance_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs = 10_000;
    for i in 0..pairs {
        let a = random_string(&mut rng);
        let b = if i % 4 == 0 { a.clone() } else { random_string(&mut rng) };
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let want = dp_distance(&ac, &bc);
        let got = levenshtein(&a, &b);
        ensure!(got == want, "levenshtein({a:?}, {b:?}) = {got}, reference {want}");
        ensure!(levenshtein(&b, &a) == got, "asymmetric on {a:?}, {b:?}");
        ensure!((got == 0) == (a == b), "identity violated on {a:?}, {b:?}");
        let n = normalized_levenshtein(&a, &b);
        let longest = ac.len().max(bc.len());
        let want_n = if longest == 0 { 0.0 } else { want as f64 / longest as f64 };
        ensure!((0.0..=1.0).contains(&n), "normalized {n} out of range");
        ensure!((n - want_n).abs() < 1e-12, "normalized {n} vs {want_n}");
        ensure!(normalized_levenshtein(&b, &a) == n, "normalized asymmetric");
        ensure!(normalized_levenshtein(&a, &a) == 0.0, "normalized self-distance");
    }
    within_budget(start, Duration::from_secs(10), format!("{pairs} pairs"))
}

// ---------------------------------------------------------------- C4

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

fn mutate(rng: &mut ChaCha8Rng, word: &str, alphabet: &[char]) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    for _ in 0..rng.random_range(1..=2) {
        let pos = rng.random_range(0..=chars.len());
        match rng.random_range(0..3) {
            0 => chars.insert(pos, alphabet[rng.random_range(0..alphabet.len())]),
            1 if pos < chars.len() && chars.len() > 1 => {
                chars.remove(pos);
            }
            _ if pos < chars.len() => chars[pos] = alphabet[rng.random_range(0..alphabet.len())],
            _ => chars.push(alphabet[0]),
        }
    }
    chars.into_iter().collect()
}

fn c4_index_equivalence() -> Outcome {
    let start = Instant::now();
    let latin: Vec<char> = ('a'..='l').collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let records: Vec<NameRecord> = (0..5_000)
        .map(|_| {
            let p = random_word(&mut rng, PERSIAN_LETTERS, 2, 8);
            let l = random_word(&mut rng, &latin, 2, 9);
            let g = if rng.random_bool(0.6) { Gender::Male } else { Gender::Female };
            NameRecord::new(&p, &l, g).unwrap()
        })
        .collect();
    let index = NameIndex::build(records).map_err(|e| Check::Fail(e.to_string()))?;
    let stored = index.records();
    let mut checked = 0usize;
    for qi in 0..1_000 {
        let persian = qi % 2 == 0;
        let (alphabet, choice): (&[char], _) = if persian {
            (PERSIAN_LETTERS, ScriptChoice::Persian)
        } else {
            (&latin, ScriptChoice::Latin)
        };
        let query = if rng.random_bool(0.5) {
            let r = &stored[rng.random_range(0..stored.len())];
            let key = if persian { r.persian().as_str() } else { r.latin().as_str() };
            mutate(&mut rng, key, alphabet)
        } else {
            random_word(&mut rng, alphabet, 1, 9)
        };
        let q: Vec<char> = query.chars().collect();
        let mut scored: Vec<(usize, usize, &NameRecord)> = stored
            .iter()
            .map(|r| {
                let key: Vec<char> = if persian { r.persian().as_str() } else { r.latin().as_str() }.chars().collect();
                (dp_distance(&q, &key), q.len().max(key.len()), r)
            })
            .collect();
        let key_of = |r: &NameRecord, main: bool| -> String {
            if main == persian { r.persian().as_str().to_string() } else { r.latin().as_str().to_string() }
        };
        scored.sort_by(|a, b| {
            (a.0 * b.1)
                .cmp(&(b.0 * a.1))
                .then_with(|| key_of(a.2, true).cmp(&key_of(b.2, true)))
                .then_with(|| a.2.gender().cmp(&b.2.gender()))
                .then_with(|| key_of(a.2, false).cmp(&key_of(b.2, false)))
        });
        for k in [1, 3, 5, 7] {
            let got = index.top_k(&query, k, choice).map_err(|e| Check::Fail(e.to_string()))?;
            ensure!(got.len() == k, "query {query:?} k={k}: {} results", got.len());
            for (rank, (n, want)) in got.iter().zip(&scored[..k]).enumerate() {
                ensure!(&n.record == want.2, "query {query:?} k={k} rank {rank}: {:?} vs {:?}", n.record, want.2);
                ensure!(n.distance == want.0 as f64 / want.1 as f64, "query {query:?} k={k} rank {rank}: distance");
            }
            checked += 1;
        }
    }
    within_budget(start, Duration::from_secs(30), format!("{checked} (query, k) cases over {} records", stored.len()))
}

// ---------------------------------------------------------------- C5

fn est(g: Gender, p: f64, source: EstimateSource) -> GenderEstimate {
    GenderEstimate::new(g, p, source)
}

fn fusion(threshold: f64, wn: f64, wi: f64) -> FusionConfig {
    FusionConfig {
        confidence_threshold: threshold,
        name_weight: wn,
        image_weight: wi,
        ..Default::default()
    }
}

fn fused(name: GenderEstimate, image: GenderEstimate, cfg: &FusionConfig) -> GenderEstimate {
    fuse(name, || Ok(image), cfg).unwrap()
}

fn c5_fusion() -> Outcome {
    use EstimateSource::{Image, Name};
    let tol = 1e-9;

    let calls = Cell::new(0);
    let out = fuse(
        est(Gender::Male, 0.9, Name),
        || {
            calls.set(calls.get() + 1);
            Ok(est(Gender::Female, 0.99, Image))
        },
        &fusion(0.8, 0.6, 0.4),
    )
    .unwrap();
    ensure!(calls.get() == 0, "image supplier invoked on bypass");
    ensure!(out.gender == Gender::Male && (out.probability - 0.9).abs() < tol && out.source == EstimateSource::Fused, "bypass gave {out:?}");

    let out = fused(est(Gender::Male, 0.6, Name), est(Gender::Male, 0.8, Image), &fusion(0.8, 0.6, 0.4));
    ensure!(out.gender == Gender::Male && (out.probability - 0.68).abs() < tol, "agreement gave {out:?}");

    let out = fused(est(Gender::Male, 0.6, Name), est(Gender::Female, 0.7, Image), &fusion(0.8, 0.5, 0.5));
    ensure!(out.gender == Gender::Female && (out.probability - 0.55).abs() < tol, "disagreement gave {out:?}");

    let out = fused(est(Gender::Male, 0.6, Name), est(Gender::Female, 0.6, Image), &fusion(0.8, 0.5, 0.5));
    ensure!(out.gender == Gender::Female && out.probability == 0.5 && out.low_confidence, "exact tie gave {out:?}");

    let out = fuse(est(Gender::Male, 0.6, Name), || Err(ImageUnavailable("down".into())), &fusion(0.8, 0.5, 0.5)).unwrap();
    ensure!(out.degraded && out.gender == Gender::Male && out.probability == 0.6, "unavailable image gave {out:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gender = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { Gender::Male } else { Gender::Female };
    let p_male = |e: &GenderEstimate| if e.gender == Gender::Male { e.probability } else { 1.0 - e.probability };
    let configs = 1_000;
    for _ in 0..configs {
        let threshold = rng.random_range(0.55..=1.0);
        let name = est(gender(&mut rng), rng.random_range(0.5..threshold), Name);
        let image = est(gender(&mut rng), rng.random_range(0.5..=1.0), Image);
        let (wn, wi) = (rng.random_range(0.01..10.0), rng.random_range(0.01..10.0));
        let cfg = fusion(threshold, wn, wi);
        let out = fused(name, image, &cfg);

        if name.gender == image.gender {
            let lo = name.probability.min(image.probability);
            let hi = name.probability.max(image.probability);
            ensure!(out.gender == name.gender, "agreement changed the label");
            ensure!(out.probability >= lo - tol && out.probability <= hi + tol, "agreement outside [{lo}, {hi}]");
        } else {
            let s = (wn * p_male(&name) + wi * p_male(&image)) / (wn + wi);
            ensure!((p_male(&out) - s).abs() < tol, "disagreement P(male) {} vs {s}", p_male(&out));
        }

        let heavier = fusion(threshold, wn * rng.random_range(1.0..20.0), wi);
        if out.gender == name.gender {
            let again = fused(name, image, &heavier);
            ensure!(again.gender == name.gender, "raising name weight flipped the label: {cfg:?} -> {heavier:?}");
        }

        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled = fused(name, image, &fusion(threshold, wn * c, wi * c));
        ensure!(scaled.gender == out.gender && (scaled.probability - out.probability).abs() < tol, "scale {c} changed {out:?} to {scaled:?}");
    }
    Ok(format!("5 branch vectors, {configs} random configurations"))
}

// ---------------------------------------------------------------- C6

fn oracle_heuristic(v: &str) -> f64 {
    let len = v.chars().count() as f64;
    let length = if (6.0..=15.0).contains(&len) {
        1.0
    } else if len < 6.0 {
        ((len - 4.0) / 2.0).max(0.0)
    } else {
        ((20.0 - len) / 5.0).max(0.0)
    };
    let digits: Vec<usize> = v.char_indices().filter(|(_, c)| c.is_ascii_digit()).map(|(i, _)| i).collect();
    let trailing = digits.iter().enumerate().all(|(n, &i)| i == v.len() - digits.len() + n);
    let digit = match digits.len() {
        0 => 1.0,
        1 | 2 if trailing => 0.6,
        _ => 0.2,
    };
    let mut read: f64 = 1.0;
    if v.contains("__") {
        read -= 0.4;
    }
    if v.starts_with('_') || v.ends_with('_') {
        read -= 0.3;
    }
    if v.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        read -= 0.3;
    }
    (0.4 * length + 0.3 * digit + 0.3 * read.max(0.0)).clamp(0.0, 1.0)
}

fn valid(v: &str) -> bool {
    (4..=20).contains(&v.len()) && v.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn check_ranking(ranked: &[UsernameCandidate], pool: &[UsernameCandidate], k: usize) -> Result<(), Check> {
    let mut oracle: Vec<(f64, &str)> = pool
        .iter()
        .map(|c| {
            let h = oracle_heuristic(c.value());
            let f = match c.ai_score() {
                Some(ai) => 0.6 * ai + 0.4 * h,
                None => h,
            };
            (f, c.value())
        })
        .collect();
    oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(b.1)));
    oracle.truncate(k);
    ensure!(ranked.len() == oracle.len(), "ranked {} vs oracle {}", ranked.len(), oracle.len());
    for (c, (f, v)) in ranked.iter().zip(&oracle) {
        ensure!(c.value() == *v, "order {:?} vs oracle {:?}", ranked.iter().map(|c| c.value()).collect::<Vec<_>>(), oracle.iter().map(|o| o.1).collect::<Vec<_>>());
        ensure!((c.final_score() - f).abs() < 1e-12, "{v}: final {} vs {f}", c.final_score());
    }
    Ok(())
}

fn nominalist_run(llm: &dyn LlmClient, require_ai: bool) -> Result<String, Check> {
    let index = NameIndex::build(bundled_sample()).unwrap();
    let cfg = NominalistConfig {
        current_year: Some(2024),
        ..Default::default()
    };
    let store = MemoryStore::default();
    let mut transcript = String::new();
    let names: Vec<String> = index.records().iter().map(|r| r.persian().as_str().to_string()).collect();
    for (i, name) in names.iter().enumerate() {
        let mut ctx = GenerationContext::new(name.clone(), 1_000 + i as u64);
        if i % 3 == 0 {
            ctx.birth_year = Some(1970 + (i % 40) as u32);
        }
        let created = create(&ctx, Some(&index), llm, &cfg).map_err(|e| Check::Fail(format!("{name}: {e}")))?;
        let n = created.candidates.len();
        ensure!((10..=12).contains(&n), "{name}: {n} candidates");
        let unique: HashSet<String> = created.candidates.iter().map(|c| c.value().to_lowercase()).collect();
        ensure!(unique.len() == n, "{name}: duplicate candidates");
        for c in &created.candidates {
            ensure!(valid(c.value()), "{name}: invalid {:?}", c.value());
        }
        let pool = created.candidates.clone();
        let reviewed = review(created.candidates, &store, llm, 12, &cfg).map_err(|e| Check::Fail(e.to_string()))?;
        let scored: Vec<UsernameCandidate> = reviewed.ranked.clone();
        ensure!(scored.len() >= 10, "{name}: only {} ranked", scored.len());
        if require_ai {
            ensure!(scored.iter().all(|c| c.ai_score().is_some()), "{name}: missing ai scores");
        } else {
            ensure!(scored.iter().all(|c| c.ai_score().is_none()), "{name}: ai scores without an llm");
        }
        let mut with_scores = pool;
        for c in &mut with_scores {
            let ai = scored.iter().find(|s| s.value() == c.value()).and_then(|s| s.ai_score());
            c.set_ai_score(ai);
        }
        check_ranking(&scored, &with_scores, 12)?;
        transcript.push_str(&serde_json::to_string(&scored).unwrap());
        transcript.push('\n');
    }
    Ok(transcript)
}

fn c6_nominalist() -> Outcome {
    let llm = onoma_cli::mock::echo_llm();
    let first = nominalist_run(&llm, true)?;
    let second = nominalist_run(&llm, true)?;
    ensure!(first == second, "runs differ");
    let offline = nominalist_run(&DisabledLlm, false)?;
    ensure!(offline == nominalist_run(&DisabledLlm, false)?, "offline runs differ");
    Ok(format!(
        "{} names with mock llm and without, bit-identical reruns",
        first.lines().count()
    ))
}

// ---------------------------------------------------------------- C7

fn spawn_service() -> String {
    let mut cfg = AppConfig::default();
    cfg.llm.provider = LlmProvider::Mock;
    cfg.nominalist.current_year = Some(2024);
    let services = Services::build(cfg).unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        rt.block_on(async move { axum::serve(listener, onoma_cli::server::router(services)).await }).unwrap();
    });
    format!("http://{addr}")
}

fn c7_service() -> Outcome {
    let base = spawn_service();
    let client = reqwest::blocking::Client::new();
    let post = |path: &str, body: &str| -> Result<(u16, Value), Check> {
        let resp = client
            .post(format!("{base}{path}"))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| Check::Fail(e.to_string()))?;
        let status = resp.status().as_u16();
        let v = resp.json().map_err(|e| Check::Fail(e.to_string()))?;
        Ok((status, v))
    };

    let (status, v) = post("/v1/gender", r#"{"name":"سارا"}"#)?;
    ensure!(status == 200, "gender status {status}");
    ensure!(v["gender"] == "female" && v["probability"] == 1.0 && v["source"] == "fused", "gender body {v}");

    let (status, v) = post("/v1/usernames", r#"{"name":"سارا","k":3}"#)?;
    ensure!(status == 200, "usernames status {status}");
    let cands = v["candidates"].as_array().cloned().unwrap_or_default();
    ensure!(cands.len() == 3, "{} candidates", cands.len());
    let finals: Vec<f64> = cands.iter().map(|c| c["final_score"].as_f64().unwrap_or(-1.0)).collect();
    ensure!(finals.windows(2).all(|w| w[0] >= w[1]), "not descending: {finals:?}");

    let (status, _) = post("/v1/gender", "{}")?;
    ensure!(status == 400, "empty body status {status}");

    let workers = 50;
    let barrier = Arc::new(Barrier::new(workers + 1));
    let names = ["سارا", "علی", "reza", "باران", "negar", "محمد‌علی", "یکتا"];
    let handles: Vec<_> = (0..workers)
        .map(|i| {
            let (client, base, barrier) = (client.clone(), base.clone(), Arc::clone(&barrier));
            let name = names[i % names.len()];
            std::thread::spawn(move || {
                barrier.wait();
                (0..10).all(|_| {
                    client
                        .post(format!("{base}/v1/gender"))
                        .header("content-type", "application/json")
                        .body(format!(r#"{{"name":"{name}"}}"#))
                        .send()
                        .is_ok_and(|r| r.status().is_success())
                })
            })
        })
        .collect();
    barrier.wait();
    let mut worst = Duration::ZERO;
    for _ in 0..20 {
        let t = Instant::now();
        let resp = client.get(format!("{base}/healthz")).send().map_err(|e| Check::Fail(e.to_string()))?;
        let took = t.elapsed();
        ensure!(resp.status().is_success(), "healthz status {}", resp.status());
        worst = worst.max(took);
        std::thread::sleep(Duration::from_millis(2));
    }
    let ok = handles.into_iter().map(|h| h.join().unwrap_or(false)).filter(|ok| *ok).count();
    ensure!(ok == workers, "{} of {workers} load workers failed", workers - ok);
    ensure!(worst < Duration::from_millis(100), "healthz worst latency {worst:.2?}");
    Ok(format!("3 examples; healthz worst {worst:.2?} under {workers} concurrent clients"))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 7] = [
        ("C1", "full dataset statistics", c1_full_dataset),
        ("C2", "bundled sample statistics", c2_sample_stats),
        ("C3", "distance oracle", c3_distance_oracle),
        ("C4", "index equivalence", c4_index_equivalence),
        ("C5", "fusion protocol", c5_fusion),
        ("C6", "username pipeline", c6_nominalist),
        ("C7", "service conformance", c7_service),
    ];
    onoma_cli::cli::init_logging("error");
    let mut failed = 0;
    println!("acceptance:");
    for (id, title, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(Check::Fail(format!("panicked: {msg}")))
        });
        match outcome {
            Ok(detail) => println!("PASS {id} {title}: {detail}"),
            Err(Check::Fail(msg)) => {
                failed += 1;
                println!("FAIL {id} {title}: {msg}");
            }
            Err(Check::NotRun(msg)) => println!("FAIL {id} {title}: not run, {msg}"),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
