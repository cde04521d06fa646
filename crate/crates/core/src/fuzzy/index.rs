use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::distance::levenshtein_chars;
use crate::dataset::{Gender, NameRecord};
use crate::normalize::{detect_script, normalize_for, NormalizedText, Script};

pub const INDEX_MAGIC: &[u8; 4] = b"ONIX";
pub const INDEX_FORMAT_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("k must be odd and at least 1, got {0}")]
    EvenK(usize),
    #[error("query is empty after normalization")]
    EmptyQuery,
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {found} (expected {INDEX_FORMAT_VERSION})")]
    UnsupportedVersion { found: u8 },
    #[error("corrupt index file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptChoice {
    Persian,
    Latin,
    #[default]
    Auto,
}

impl ScriptChoice {
    pub fn resolve(self, query: &str) -> Script {
        match self {
            ScriptChoice::Persian => Script::Persian,
            ScriptChoice::Latin => Script::Latin,
            ScriptChoice::Auto => detect_script(query),
        }
    }
}

impl std::str::FromStr for ScriptChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "persian" | "fa" => Ok(ScriptChoice::Persian),
            "latin" | "en" => Ok(ScriptChoice::Latin),
            "auto" => Ok(ScriptChoice::Auto),
            other => Err(format!("unknown script {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub record: NameRecord,
    /// Normalized Levenshtein distance in [0, 1].
    pub distance: f64,
}

/// Raw edit distance together with the length it is normalized by, so that
/// distances compare exactly as rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Ratio {
    edits: u64,
    longest: u64,
}

impl Ratio {
    fn new(edits: usize, longest: usize) -> Self {
        Self {
            edits: edits as u64,
            longest: longest as u64,
        }
    }

    fn value(self) -> f64 {
        if self.longest == 0 {
            0.0
        } else {
            self.edits as f64 / self.longest as f64
        }
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.edits * other.longest.max(1);
        let rhs = other.edits * self.longest.max(1);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Node {
    key: usize,
    children: Vec<(u32, usize)>,
}

/// Distinct keys of one script with a BK-tree over raw edit distance.
struct KeySpace {
    keys: Vec<Vec<char>>,
    /// Record ids per key, ordered by (gender, other-script key).
    members: Vec<Vec<usize>>,
    lookup: BTreeMap<NormalizedText, usize>,
    nodes: Vec<Node>,
    longest_key: usize,
}

impl KeySpace {
    fn build(records: &[NameRecord], script: Script) -> Self {
        let mut grouped: BTreeMap<NormalizedText, Vec<usize>> = BTreeMap::new();
        for (id, r) in records.iter().enumerate() {
            grouped.entry(key_of(r, script).clone()).or_default().push(id);
        }
        let other = match script {
            Script::Persian => Script::Latin,
            Script::Latin => Script::Persian,
        };
        let mut space = KeySpace {
            keys: Vec::with_capacity(grouped.len()),
            members: Vec::with_capacity(grouped.len()),
            lookup: BTreeMap::new(),
            nodes: Vec::with_capacity(grouped.len()),
            longest_key: 0,
        };
        for (key, mut ids) in grouped {
            ids.sort_by(|&a, &b| {
                let (ra, rb) = (&records[a], &records[b]);
                (ra.gender(), key_of(ra, other), a).cmp(&(rb.gender(), key_of(rb, other), b))
            });
            let chars: Vec<char> = key.as_str().chars().collect();
            space.longest_key = space.longest_key.max(chars.len());
            space.lookup.insert(key, space.keys.len());
            space.keys.push(chars);
            space.members.push(ids);
        }
        for key in 0..space.keys.len() {
            space.insert(key);
        }
        space
    }

    fn insert(&mut self, key: usize) {
        let new_id = self.nodes.len();
        self.nodes.push(Node {
            key,
            children: Vec::new(),
        });
        if new_id == 0 {
            return;
        }
        let mut cur = 0;
        loop {
            let d = levenshtein_chars(&self.keys[self.nodes[cur].key], &self.keys[key]) as u32;
            match self.nodes[cur].children.iter().find(|(cd, _)| *cd == d) {
                Some(&(_, child)) => cur = child,
                None => {
                    self.nodes[cur].children.push((d, new_id));
                    return;
                }
            }
        }
    }

    /// Keys whose raw distance to `query` is at most `radius`. Distances are
    /// memoized across calls with growing radius.
    fn within(&self, query: &[char], radius: u32, memo: &mut [Option<u32>], out: &mut Vec<(usize, u32)>) {
        out.clear();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let d = *memo[n].get_or_insert_with(|| levenshtein_chars(query, &self.keys[node.key]) as u32);
            if d <= radius {
                out.push((node.key, d));
            }
            let (lo, hi) = (d.saturating_sub(radius), d + radius);
            stack.extend(node.children.iter().filter(|(cd, _)| (lo..=hi).contains(cd)).map(|&(_, c)| c));
        }
    }
}

fn key_of(r: &NameRecord, script: Script) -> &NormalizedText {
    match script {
        Script::Persian => r.persian(),
        Script::Latin => r.latin(),
    }
}

/// Immutable name index answering top-K queries over both scripts.
pub struct NameIndex {
    records: Vec<NameRecord>,
    persian: KeySpace,
    latin: KeySpace,
}

impl std::fmt::Debug for NameIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NameIndex")
            .field("records", &self.records.len())
            .field("persian_keys", &self.persian.keys.len())
            .field("latin_keys", &self.latin.keys.len())
            .finish()
    }
}

struct Scored {
    ratio: Ratio,
    key: usize,
    member_rank: usize,
    record: usize,
}

impl NameIndex {
    pub fn build(records: Vec<NameRecord>) -> Result<Self, IndexError> {
        if records.is_empty() {
            return Err(IndexError::EmptyDataset);
        }
        let persian = KeySpace::build(&records, Script::Persian);
        let latin = KeySpace::build(&records, Script::Latin);
        Ok(Self {
            records,
            persian,
            latin,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[NameRecord] {
        &self.records
    }

    fn space(&self, script: Script) -> &KeySpace {
        match script {
            Script::Persian => &self.persian,
            Script::Latin => &self.latin,
        }
    }

    /// Records whose key in `script` equals the normalized `query`.
    pub fn exact(&self, query: &str, script: Script) -> Vec<&NameRecord> {
        let space = self.space(script);
        space
            .lookup
            .get(&normalize_for(script, query))
            .map(|&k| space.members[k].iter().map(|&id| &self.records[id]).collect())
            .unwrap_or_default()
    }

    fn prepare(&self, query: &str, k: usize, script: ScriptChoice) -> Result<(Script, Vec<char>, usize), IndexError> {
        if k.is_multiple_of(2) {
            return Err(IndexError::EvenK(k));
        }
        let script = script.resolve(query);
        let query = normalize_for(script, query);
        if query.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        let k = if k > self.records.len() {
            tracing::warn!(k, size = self.records.len(), "k exceeds index size; clamping");
            self.records.len()
        } else {
            k
        };
        Ok((script, query.as_str().chars().collect(), k))
    }

    fn finish(&self, space: &KeySpace, mut scored: Vec<Scored>, k: usize) -> Vec<Neighbor> {
        scored.sort_by(|a, b| {
            a.ratio
                .cmp(&b.ratio)
                .then_with(|| space.keys[a.key].cmp(&space.keys[b.key]))
                .then(a.member_rank.cmp(&b.member_rank))
        });
        scored.truncate(k);
        scored
            .into_iter()
            .map(|s| Neighbor {
                record: self.records[s.record].clone(),
                distance: s.ratio.value(),
            })
            .collect()
    }

    fn expand(space: &KeySpace, key: usize, ratio: Ratio, out: &mut Vec<Scored>) {
        out.extend(space.members[key].iter().enumerate().map(|(rank, &record)| Scored {
            ratio,
            key,
            member_rank: rank,
            record,
        }));
    }

    /// The `k` nearest records by normalized Levenshtein distance, ordered by
    /// (distance, matched key, gender with female first, other-script key).
    ///
    /// The BK-tree is searched with a growing radius on the raw edit
    /// distance. Any key outside radius `r` has normalized distance at least
    /// `(r + 1) / max(|q|, longest key)`, so the search stops once the k-th
    /// candidate is strictly below that bound.
    pub fn top_k(&self, query: &str, k: usize, script: ScriptChoice) -> Result<Vec<Neighbor>, IndexError> {
        let (script, q, k) = self.prepare(query, k, script)?;
        let space = self.space(script);
        let denom = q.len().max(space.longest_key) as u64;
        let mut memo = vec![None; space.nodes.len()];
        let mut hits = Vec::new();
        let mut radius = 0u32;
        loop {
            space.within(&q, radius, &mut memo, &mut hits);
            let mut scored = Vec::new();
            for &(key, d) in &hits {
                let ratio = Ratio::new(d as usize, q.len().max(space.keys[key].len()));
                Self::expand(space, key, ratio, &mut scored);
            }
            let exhausted = u64::from(radius) >= denom;
            if scored.len() >= k || exhausted {
                if exhausted {
                    return Ok(self.finish(space, scored, k));
                }
                scored.select_nth_unstable_by(k - 1, |a, b| a.ratio.cmp(&b.ratio));
                let kth = scored[k - 1].ratio;
                // kth < (radius + 1) / denom, compared exactly.
                if kth.edits * denom < (u64::from(radius) + 1) * kth.longest {
                    return Ok(self.finish(space, scored, k));
                }
                let needed = (kth.edits * denom) / kth.longest.max(1);
                radius = (radius + 1).max(needed as u32);
            } else {
                radius += 1;
            }
        }
    }

    /// Reference linear scan with the same ordering as [`NameIndex::top_k`].
    pub fn top_k_exhaustive(&self, query: &str, k: usize, script: ScriptChoice) -> Result<Vec<Neighbor>, IndexError> {
        let (script, q, k) = self.prepare(query, k, script)?;
        let space = self.space(script);
        let mut scored = Vec::with_capacity(self.records.len());
        for (key, chars) in space.keys.iter().enumerate() {
            let ratio = Ratio::new(levenshtein_chars(&q, chars), q.len().max(chars.len()));
            Self::expand(space, key, ratio, &mut scored);
        }
        Ok(self.finish(space, scored, k))
    }

    /// Writes `ONIX`, a format version byte, a record count and the records.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), IndexError> {
        w.write_all(INDEX_MAGIC)?;
        w.write_all(&[INDEX_FORMAT_VERSION])?;
        w.write_all(&(self.records.len() as u32).to_le_bytes())?;
        for r in &self.records {
            for field in [r.persian().as_str(), r.latin().as_str()] {
                w.write_all(&(field.len() as u32).to_le_bytes())?;
                w.write_all(field.as_bytes())?;
            }
            w.write_all(&[match r.gender() {
                Gender::Female => 0,
                Gender::Male => 1,
            }])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self, IndexError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| IndexError::BadMagic)?;
        if &magic != INDEX_MAGIC {
            return Err(IndexError::BadMagic);
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version)?;
        if version[0] != INDEX_FORMAT_VERSION {
            return Err(IndexError::UnsupportedVersion { found: version[0] });
        }
        let truncated = |_| IndexError::Corrupt("truncated".into());
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(truncated)?;
        let count = u32::from_le_bytes(word) as usize;
        let mut records = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let mut fields = [String::new(), String::new()];
            for field in &mut fields {
                r.read_exact(&mut word).map_err(truncated)?;
                let mut buf = vec![0u8; u32::from_le_bytes(word) as usize];
                r.read_exact(&mut buf).map_err(truncated)?;
                *field = String::from_utf8(buf).map_err(|_| IndexError::Corrupt("invalid UTF-8".into()))?;
            }
            let mut g = [0u8; 1];
            r.read_exact(&mut g).map_err(truncated)?;
            let gender = match g[0] {
                0 => Gender::Female,
                1 => Gender::Male,
                other => return Err(IndexError::Corrupt(format!("bad gender byte {other}"))),
            };
            let record = NameRecord::new(&fields[0], &fields[1], gender)
                .map_err(|e| IndexError::Corrupt(e.to_string()))?;
            records.push(record);
        }
        Self::build(records)
    }
}
