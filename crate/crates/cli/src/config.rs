//! Run configuration: one TOML document, strict about unknown keys, with
//! defaults for everything but the task list and the models.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use reasonbench::gateway::{Dialect, HttpConfig};
use reasonbench::gen::DifficultyTable;
use reasonbench::prompt::PromptMode;
use reasonbench::scaling::{default_matrix, ScalingStrategy, Selection};
use reasonbench::task::TaskKind;

pub const DEFAULT_LEVEL: u32 = 10;
pub const DEFAULT_INSTANCE_COUNT: usize = 100;
pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { key: key.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Anthropic,
    OpenAi,
    /// Replies with a fixed text.
    Mock,
    /// Answers every generated instance exactly.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Label used in reports.
    pub name: String,
    pub backend: BackendKind,
    /// Provider model id; defaults to `name`.
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Whether the model offers a thinking mode.
    #[serde(default)]
    pub thinking: Option<bool>,
    /// Requests per minute; unlimited when absent.
    #[serde(default)]
    pub rpm: Option<u32>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    /// Reply text of the mock backend.
    #[serde(default)]
    pub reply: Option<String>,
}

impl ModelConfig {
    pub fn model_id(&self) -> &str {
        self.model.as_deref().unwrap_or(&self.name)
    }

    /// The fields that can change a reply; rate and timeout settings are
    /// left out so tuning them does not invalidate a resumable log.
    pub fn identity(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "backend": self.backend,
            "model": self.model_id(),
            "endpoint": self.endpoint,
            "thinking": self.thinking,
            "reply": self.reply,
        })
    }

    pub fn http_config(&self) -> Option<HttpConfig> {
        let dialect = match self.backend {
            BackendKind::Anthropic => Dialect::Anthropic,
            BackendKind::OpenAi => Dialect::OpenAi,
            _ => return None,
        };
        Some(HttpConfig {
            dialect,
            endpoint: self.endpoint.clone()?,
            api_key_env: self.api_key_env.clone()?,
            timeout_secs: self.timeout_secs.unwrap_or(600),
            thinking: self.thinking.unwrap_or(false),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    #[serde(with = "slug")]
    pub mode: PromptMode,
    pub strategy: ScalingStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(with = "slug::list")]
    pub tasks: Vec<TaskKind>,
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
    #[serde(default = "default_count")]
    pub instance_count: usize,
    #[serde(default)]
    pub seed: u64,
    pub models: Vec<ModelConfig>,
    /// Defaults to the full 3 x 4 grid.
    #[serde(default = "default_cells")]
    pub matrix: Vec<CellConfig>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default)]
    pub max_output_tokens: Option<u32>,
    #[serde(default)]
    pub max_prompt_tokens: Option<usize>,
    /// Upper bound on any thinking budget.
    #[serde(default)]
    pub thinking_cap: Option<u32>,
    /// JSONL instances to use instead of generating them.
    #[serde(default)]
    pub instances_file: Option<PathBuf>,
    /// Replaces the built-in level table.
    #[serde(default)]
    pub difficulty: Option<DifficultyTable>,
}

/// Config files name tasks and modes by their command-line slugs.
mod slug {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }

    pub mod list {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for item in v {
                seq.serialize_element(&item.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, T, D>(d: D) -> Result<Vec<T>, D::Error>
        where
            T: FromStr,
            T::Err: Display,
            D: Deserializer<'de>,
        {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|s| s.parse().map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

fn default_levels() -> Vec<u32> {
    vec![DEFAULT_LEVEL]
}

fn default_count() -> usize {
    DEFAULT_INSTANCE_COUNT
}

fn default_cells() -> Vec<CellConfig> {
    default_matrix().into_iter().map(|(mode, strategy)| CellConfig { mode, strategy }).collect()
}

fn default_concurrency() -> usize {
    DEFAULT_CONCURRENCY
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn table(&self) -> DifficultyTable {
        self.difficulty.clone().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tasks.is_empty() {
            return Err(ConfigError::invalid("tasks", "at least one task is required"));
        }
        if self.instance_count == 0 {
            return Err(ConfigError::invalid("instance_count", "must be at least 1"));
        }
        if self.matrix.is_empty() {
            return Err(ConfigError::invalid("matrix", "at least one cell is required"));
        }
        if self.concurrency == 0 {
            return Err(ConfigError::invalid("concurrency", "must be at least 1"));
        }
        let table = self.table();
        table.validate().map_err(|e| ConfigError::invalid("difficulty", e))?;
        for (i, l) in self.levels.iter().enumerate() {
            if table.row(*l).is_none() {
                return Err(ConfigError::invalid(format!("levels[{i}]"), format!("level {l} is not in the difficulty table")));
            }
        }
        if self.levels.is_empty() {
            return Err(ConfigError::invalid("levels", "at least one level is required"));
        }
        for (i, c) in self.matrix.iter().enumerate() {
            c.strategy.validate().map_err(|e| ConfigError::invalid(format!("matrix[{i}].strategy"), e.to_string()))?;
        }
        if self.models.is_empty() {
            return Err(ConfigError::invalid("models", "at least one model is required"));
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, m) in self.models.iter().enumerate() {
            let key = |field: &str| format!("models[{i}].{field}");
            if !names.insert(m.name.as_str()) {
                return Err(ConfigError::invalid(key("name"), format!("duplicate model name `{}`", m.name)));
            }
            if m.name.is_empty() || m.name.contains(',') {
                return Err(ConfigError::invalid(key("name"), "must be non-empty and free of commas"));
            }
            match m.backend {
                BackendKind::Anthropic | BackendKind::OpenAi => {
                    if m.endpoint.is_none() {
                        return Err(ConfigError::invalid(key("endpoint"), "required for HTTP backends"));
                    }
                    if m.api_key_env.is_none() {
                        return Err(ConfigError::invalid(key("api_key_env"), "required for HTTP backends"));
                    }
                }
                BackendKind::Mock | BackendKind::Oracle => {
                    if m.endpoint.is_some() || m.api_key_env.is_some() {
                        return Err(ConfigError::invalid(key("endpoint"), "only HTTP backends take an endpoint or key"));
                    }
                }
            }
            if m.rpm == Some(0) {
                return Err(ConfigError::invalid(key("rpm"), "must be positive"));
            }
        }
        Ok(())
    }
}

/// Parses and checks a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let at = e.span().map_or(0, |s| s.start);
        let before = &text[..at];
        ConfigError::Syntax {
            line: before.matches('\n').count() + 1,
            column: before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn validate_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    parse_config(&text)
}
