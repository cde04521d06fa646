use std::path::{Path, PathBuf};

use onoma::inference::{ConfigError, FusionConfig};
use onoma::llm::LlmConfig;
use onoma::nominalist::NominalistConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LlmProvider {
    /// No llm; llm-backed stages degrade.
    #[default]
    Disabled,
    /// Deterministic in-process responder.
    Mock,
    /// OpenAI-compatible chat completions endpoint.
    Openai,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSettings {
    pub provider: LlmProvider,
    #[serde(flatten)]
    pub client: LlmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    /// Answer 503 instead of a degraded result.
    pub strict: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    /// Dataset file (csv, tsv, jsonl) or compiled index (.onix). The bundled
    /// sample is used when unset.
    pub dataset_path: Option<PathBuf>,
    /// Plain-text file of taken usernames, or an http(s) lookup endpoint.
    pub username_store: Option<String>,
    /// Remote image scorer endpoint.
    pub image_scorer: Option<String>,
    /// Base seed mixed into per-name username seeds.
    pub seed: u64,
    pub log_level: String,
    pub fusion: FusionConfig,
    pub llm: LlmSettings,
    pub nominalist: NominalistConfig,
    pub server: ServerConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            dataset_path: None,
            username_store: None,
            image_scorer: None,
            seed: 0,
            log_level: "warn".into(),
            fusion: FusionConfig::default(),
            llm: LlmSettings::default(),
            nominalist: NominalistConfig::default(),
            server: ServerConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum AppConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("{0} does not exist")]
    MissingPath(PathBuf),
    #[error("fusion: {0}")]
    Fusion(#[from] ConfigError),
    #[error("nominalist: min_candidates must not exceed max_candidates")]
    CandidateBounds,
}

/// Values that override the config file; each is `None` unless set by a
/// flag or its environment variable.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Config file (TOML)
    #[arg(long, global = true, env = "ONOMA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Dataset file or compiled index
    #[arg(long, global = true, env = "ONOMA_DATASET")]
    pub dataset: Option<PathBuf>,
    /// Taken-usernames file or lookup URL
    #[arg(long, global = true, env = "ONOMA_USERNAME_STORE")]
    pub username_store: Option<String>,
    /// Image scorer URL
    #[arg(long, global = true, env = "ONOMA_IMAGE_SCORER")]
    pub image_scorer: Option<String>,
    #[arg(long, global = true, env = "ONOMA_LLM_PROVIDER", value_enum)]
    pub llm_provider: Option<LlmProvider>,
    #[arg(long, global = true, env = "ONOMA_LLM_BASE_URL")]
    pub llm_base_url: Option<String>,
    #[arg(long, global = true, env = "ONOMA_LLM_MODEL")]
    pub llm_model: Option<String>,
    #[arg(long, global = true, env = "ONOMA_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "ONOMA_LOG")]
    pub log_level: Option<String>,
    #[arg(long, global = true, env = "ONOMA_BIND")]
    pub bind: Option<String>,
    #[arg(long, global = true, env = "ONOMA_PORT")]
    pub port: Option<u16>,
    /// Refuse degraded answers in the service
    #[arg(long, global = true, env = "ONOMA_STRICT")]
    pub strict: bool,
}

impl AppConfig {
    pub fn from_file(path: &Path) -> Result<Self, AppConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| AppConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|source| AppConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Defaults, then the config file, then flags and environment.
    pub fn resolve(ov: &Overrides) -> Result<Self, AppConfigError> {
        let mut cfg = match &ov.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        cfg.apply(ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(v) = &ov.dataset {
            self.dataset_path = Some(v.clone());
        }
        if let Some(v) = &ov.username_store {
            self.username_store = Some(v.clone());
        }
        if let Some(v) = &ov.image_scorer {
            self.image_scorer = Some(v.clone());
        }
        if let Some(v) = ov.llm_provider {
            self.llm.provider = v;
        }
        if let Some(v) = &ov.llm_base_url {
            self.llm.client.base_url = v.clone();
        }
        if let Some(v) = &ov.llm_model {
            self.llm.client.model = v.clone();
        }
        if let Some(v) = ov.seed {
            self.seed = v;
        }
        if let Some(v) = &ov.log_level {
            self.log_level = v.clone();
        }
        if let Some(v) = &ov.bind {
            self.server.bind = v.clone();
        }
        if let Some(v) = ov.port {
            self.server.port = v;
        }
        if ov.strict {
            self.server.strict = true;
        }
    }

    pub fn validate(&self) -> Result<(), AppConfigError> {
        if let Some(p) = &self.dataset_path {
            if !p.exists() {
                return Err(AppConfigError::MissingPath(p.clone()));
            }
        }
        if let Some(s) = &self.username_store {
            if !is_url(s) && !Path::new(s).exists() {
                return Err(AppConfigError::MissingPath(PathBuf::from(s)));
            }
        }
        self.fusion.validate()?;
        if self.nominalist.min_candidates > self.nominalist.max_candidates {
            return Err(AppConfigError::CandidateBounds);
        }
        Ok(())
    }
}

pub(crate) fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}
