use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("username store unavailable: {0}")]
pub struct StoreError(pub String);

/// Existing usernames, compared case-insensitively.
pub trait UsernameStore: Send + Sync {
    fn exists(&self, username: &str) -> Result<bool, StoreError>;
}

#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    names: BTreeSet<String>,
}

impl MemoryStore {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            names: names.into_iter().map(|s| s.as_ref().trim().to_lowercase()).filter(|s| !s.is_empty()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl UsernameStore for MemoryStore {
    fn exists(&self, username: &str) -> Result<bool, StoreError> {
        Ok(self.names.contains(&username.to_lowercase()))
    }
}

/// Plain-text store: one username per line.
#[derive(Debug, Clone)]
pub struct FileStore {
    sorted: Vec<String>,
}

impl FileStore {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| StoreError(format!("{}: {e}", path.display())))?;
        Ok(Self::from_lines(&text))
    }

    pub fn from_lines(text: &str) -> Self {
        let mut sorted: Vec<String> = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        sorted.sort();
        sorted.dedup();
        Self { sorted }
    }
}

impl UsernameStore for FileStore {
    fn exists(&self, username: &str) -> Result<bool, StoreError> {
        Ok(self.sorted.binary_search(&username.to_lowercase()).is_ok())
    }
}

/// Key-lookup service: `GET <base_url>?username=<name>` answering
/// `{"exists": true|false}`.
pub struct HttpStore {
    base_url: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ExistsReply {
    exists: bool,
}

impl HttpStore {
    pub fn new(base_url: impl Into<String>, timeout: Duration) -> Result<Self, StoreError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| StoreError(e.to_string()))?;
        Ok(Self {
            base_url: base_url.into(),
            client,
        })
    }
}

impl UsernameStore for HttpStore {
    fn exists(&self, username: &str) -> Result<bool, StoreError> {
        let resp = self
            .client
            .get(&self.base_url)
            .query(&[("username", username.to_lowercase())])
            .send()
            .map_err(|e| StoreError(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(StoreError(format!("store returned {}", resp.status())));
        }
        resp.json::<ExistsReply>().map(|r| r.exists).map_err(|e| StoreError(e.to_string()))
    }
}
