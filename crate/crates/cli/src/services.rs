use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use onoma::dataset::{bundled_sample, load_records, DatasetError, Format, LoadOptions};
use onoma::fuzzy::IndexError;
use onoma::image::{image_estimate, ImageScorer, NoScorer, RemoteScorer};
use onoma::inference::{fuse_with_timeout, infer_from_name, GenderEstimate, ImageUnavailable, InferenceError};
use onoma::llm::{DisabledLlm, LlmClient, OpenAiClient};
use onoma::nominalist::{
    seed_for_name, FileStore, GenerationContext, HttpStore, MemoryStore, Nominalist, NominalistError, Suggestions,
    UsernameStore,
};
use onoma::NameIndex;
use thiserror::Error;

use crate::config::{is_url, AppConfig, LlmProvider};
use crate::mock::echo_llm;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("{0}")]
    Dependency(String),
}

pub fn is_index_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("onix"))
}

/// Builds the index from a dataset file, a compiled index, or the bundled
/// sample when `path` is `None`.
pub fn load_index(path: Option<&Path>) -> Result<NameIndex, ServiceError> {
    match path {
        None => Ok(NameIndex::build(bundled_sample())?),
        Some(p) if is_index_file(p) => {
            let file = File::open(p).map_err(|_| DatasetError::FileNotFound(p.display().to_string()))?;
            Ok(NameIndex::load(BufReader::new(file))?)
        }
        Some(p) => {
            let loaded = load_records(p, Format::from_path(p), &LoadOptions::default())?;
            if !loaded.rejected.is_empty() {
                tracing::warn!(rejected = loaded.rejected.len(), path = %p.display(), "skipped invalid rows");
            }
            Ok(NameIndex::build(loaded.records)?)
        }
    }
}

pub fn build_llm(cfg: &AppConfig) -> Arc<dyn LlmClient> {
    match cfg.llm.provider {
        LlmProvider::Disabled => Arc::new(DisabledLlm),
        LlmProvider::Mock => Arc::new(echo_llm()),
        LlmProvider::Openai => Arc::new(OpenAiClient::from_env(cfg.llm.client.clone())),
    }
}

pub fn build_store(cfg: &AppConfig) -> Result<Arc<dyn UsernameStore>, ServiceError> {
    let dep = |e: onoma::nominalist::StoreError| ServiceError::Dependency(e.to_string());
    Ok(match cfg.username_store.as_deref() {
        None => Arc::new(MemoryStore::default()),
        Some(s) if is_url(s) => Arc::new(HttpStore::new(s, Duration::from_secs(5)).map_err(dep)?),
        Some(s) => Arc::new(FileStore::open(Path::new(s)).map_err(dep)?),
    })
}

pub fn build_images(cfg: &AppConfig) -> Result<Arc<dyn ImageScorer>, ServiceError> {
    Ok(match &cfg.image_scorer {
        None => Arc::new(NoScorer),
        Some(url) => {
            let timeout = Duration::from_millis(cfg.fusion.image_timeout_ms.unwrap_or(30_000));
            Arc::new(RemoteScorer::new(url.clone(), timeout).map_err(|e| ServiceError::Dependency(e.to_string()))?)
        }
    })
}

/// Everything a request needs; immutable once built.
#[derive(Clone)]
pub struct Services {
    pub index: Arc<NameIndex>,
    pub llm: Arc<dyn LlmClient>,
    pub store: Arc<dyn UsernameStore>,
    pub images: Arc<dyn ImageScorer>,
    pub config: AppConfig,
}

impl Services {
    pub fn build(config: AppConfig) -> Result<Self, ServiceError> {
        let index = load_index(config.dataset_path.as_deref())?;
        tracing::info!(records = index.len(), "index ready");
        Ok(Self {
            index: Arc::new(index),
            llm: build_llm(&config),
            store: build_store(&config)?,
            images: build_images(&config)?,
            config,
        })
    }

    pub fn gender(&self, name: &str, image_refs: &[String]) -> Result<GenderEstimate, InferenceError> {
        let fusion = &self.config.fusion;
        let name_est = infer_from_name(&self.index, name, fusion)?;
        let images = Arc::clone(&self.images);
        let refs = image_refs.to_vec();
        let tie = fusion.tie_label;
        fuse_with_timeout(
            name_est,
            move || {
                if refs.is_empty() {
                    return Err(ImageUnavailable("no images supplied".into()));
                }
                image_estimate(&*images, &refs, tie).inspect_err(|e| tracing::warn!(error = %e, "image scoring failed"))
            },
            fusion,
        )
    }

    pub fn nominalist(&self) -> Nominalist {
        Nominalist {
            index: Arc::clone(&self.index),
            llm: Arc::clone(&self.llm),
            store: Arc::clone(&self.store),
            config: self.config.nominalist.clone(),
        }
    }

    /// Ranked usernames for `name`; the seed defaults to one derived from the
    /// name so identical requests give identical answers.
    pub fn usernames(
        &self,
        name: &str,
        birth_year: Option<u32>,
        k: usize,
        seed: Option<u64>,
    ) -> Result<Suggestions, NominalistError> {
        let seed = seed.unwrap_or_else(|| seed_for_name(name, self.config.seed));
        let mut ctx = GenerationContext::new(name, seed);
        ctx.birth_year = birth_year;
        self.nominalist().suggest(&ctx, k)
    }
}
