//! The composition config file.
//!
//! TOML by default, JSON when the file name ends in `.json`. Relative
//! `grammars` and `lexicons` paths are resolved against the config file's
//! directory.
//!
//! ```toml
//! seed = 42
//! quota_per_intent = 500        # or "all"
//! all_cap = 1000000
//! dedup = "global"              # or "within_intent"
//! threshold = 0.5
//! grammars = "grammars"
//! lexicons = "lexicons"
//!
//! [split]
//! train = 0.8
//! validation = 0.1
//! test = 0.1
//!
//! [[intent]]
//! label = "DIVORCE-PARTNER"
//! background = "BgDivorce"
//! core = "CoreDivorcePartner"
//! requests = ["ReqWh", "ReqYn"]
//! allow_empty_background = true
//! allow_empty_request = true
//! answer_url = "https://example.org/cases/divorce-partner"
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use lgg_core::dataset::DEFAULT_ALL_CAP;
use lgg_core::{CompositionConfig, DedupPolicy, IntentSpec, Quota, SplitRatios};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default = "default_quota")]
    pub quota_per_intent: QuotaValue,
    #[serde(default = "default_cap")]
    pub all_cap: u64,
    #[serde(default = "default_dedup")]
    pub dedup: DedupPolicy,
    #[serde(default)]
    pub split: SplitRatios,
    pub threshold: Option<f64>,
    pub grammars: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    #[serde(rename = "intent", default)]
    pub intents: Vec<IntentEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuotaValue {
    Count(u64),
    Word(QuotaWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuotaWord {
    All,
}

impl From<QuotaValue> for Quota {
    fn from(q: QuotaValue) -> Self {
        match q {
            QuotaValue::Count(n) => Quota::Count(n),
            QuotaValue::Word(QuotaWord::All) => Quota::All,
        }
    }
}

fn default_quota() -> QuotaValue {
    QuotaValue::Word(QuotaWord::All)
}

fn default_cap() -> u64 {
    DEFAULT_ALL_CAP
}

fn default_dedup() -> DedupPolicy {
    DedupPolicy::Global
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentEntry {
    pub label: String,
    pub background: Option<String>,
    pub core: String,
    #[serde(default)]
    pub requests: Vec<String>,
    #[serde(default)]
    pub allow_empty_background: bool,
    #[serde(default)]
    pub allow_empty_request: bool,
    pub answer_url: Option<String>,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Toml(PathBuf, toml::de::Error),
    Json(PathBuf, serde_json::Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            ConfigError::Toml(p, e) => write!(f, "{}: {e}", p.display()),
            ConfigError::Json(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A parsed config with paths made absolute.
#[derive(Debug, Clone)]
pub struct Config {
    pub file: ConfigFile,
    pub path: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.into(), e))?;
        let mut file: ConfigFile = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| ConfigError::Json(path.into(), e))?
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Toml(path.into(), e))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for dir in [&mut file.grammars, &mut file.lexicons].into_iter().flatten() {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(Config { file, path: path.into() })
    }

    pub fn intent_specs(&self) -> Vec<IntentSpec> {
        self.file
            .intents
            .iter()
            .map(|e| IntentSpec {
                label: e.label.clone(),
                background: e.background.clone(),
                core: e.core.clone(),
                requests: e.requests.clone(),
                allow_empty_background: e.allow_empty_background,
                allow_empty_request: e.allow_empty_request,
            })
            .collect()
    }

    /// The composition config, with `seed` taking precedence over the file.
    pub fn composition(&self, seed: Option<u64>) -> Option<CompositionConfig> {
        let seed = seed.or(self.file.seed)?;
        let mut cfg = CompositionConfig::new(self.intent_specs(), self.file.quota_per_intent.into(), seed);
        cfg.all_cap = self.file.all_cap;
        cfg.dedup = self.file.dedup;
        cfg.split = self.file.split;
        Some(cfg)
    }

    pub fn answer_urls(&self) -> BTreeMap<String, String> {
        self.file
            .intents
            .iter()
            .filter_map(|e| Some((e.label.clone(), e.answer_url.clone()?)))
            .collect()
    }
}
