//! TOML configuration. Every key is optional; relative paths are resolved
//! against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{DEFAULT_MAX_AUTOPILOT_STEPS, DEFAULT_MAX_CALL_DEPTH};
use crate::intent::{Granularity, MatcherConfig, Thresholds};
use crate::workflow::ActionKind;

pub const CONFIG_ENV: &str = "STATEBUDDY_CONFIG";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_LOG_DIR: &str = "statebuddy-logs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Workflow definitions; the bundled demo when unset.
    pub workflow_dir: Option<PathBuf>,
    /// Helper documents; the bundled demo slides when unset.
    pub helper_dir: Option<PathBuf>,
    /// Virtual-GUI scenarios; the bundled demo apps when unset.
    pub scenario_files: Option<Vec<PathBuf>>,
    pub log_dir: PathBuf,
    pub bind: String,
    pub cursor_speed_ms: u64,
    pub max_call_depth: usize,
    pub max_autopilot_steps: usize,
    /// Accept unknown fields in workflow files.
    pub lenient: bool,
    pub thresholds: ThresholdConfig,
    pub embedding: EmbeddingConfig,
    pub device: DeviceConfig,
    /// Per action kind timeout in milliseconds, keyed by kind name.
    pub timeouts: BTreeMap<String, u64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            workflow_dir: None,
            helper_dir: None,
            scenario_files: None,
            log_dir: PathBuf::from(DEFAULT_LOG_DIR),
            bind: DEFAULT_BIND.to_string(),
            cursor_speed_ms: 0,
            max_call_depth: DEFAULT_MAX_CALL_DEPTH,
            max_autopilot_steps: DEFAULT_MAX_AUTOPILOT_STEPS,
            lenient: false,
            thresholds: ThresholdConfig::default(),
            embedding: EmbeddingConfig::default(),
            device: DeviceConfig::default(),
            timeouts: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub tau_lev: usize,
    pub tau_jac: f64,
    pub tau_cos: f64,
    pub jaccard_granularity: Granularity,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        let t = Thresholds::default();
        Self {
            tau_lev: t.tau_lev,
            tau_jac: t.tau_jac,
            tau_cos: t.tau_cos,
            jaccard_granularity: Granularity::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    #[default]
    Hash,
    /// JSONL file of `{"text", "vector"}` records.
    Table { path: PathBuf },
    Http {
        url: String,
        #[serde(default = "default_embedding_timeout")]
        timeout_ms: u64,
    },
}

fn default_embedding_timeout() -> u64 {
    2_000
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviceConfig {
    /// Acknowledges every command without a device.
    #[default]
    Stub,
    /// NDJSON over a persistent TCP connection.
    Tcp { addr: String },
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl Config {
    /// Parses a config document, resolving relative paths against `base`.
    pub fn from_toml(source: &str, base: &Path, origin: &str) -> Result<Self, ConfigError> {
        let mut c: Config = toml::from_str(source).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        c.resolve(base);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, &path.display().to_string())
    }

    /// `path` when given, else `$STATEBUDDY_CONFIG`, else defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = &mut self.workflow_dir {
            fix(p);
        }
        if let Some(p) = &mut self.helper_dir {
            fix(p);
        }
        for p in self.scenario_files.iter_mut().flatten() {
            fix(p);
        }
        fix(&mut self.log_dir);
        if let EmbeddingConfig::Table { path } = &mut self.embedding {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.matcher_config()?;
        if self.max_call_depth == 0 {
            return Err(ConfigError::Invalid("max_call_depth must be at least 1".into()));
        }
        for k in self.timeouts.keys() {
            parse_kind(k)?;
        }
        Ok(())
    }

    pub fn matcher_config(&self) -> Result<MatcherConfig, ConfigError> {
        let t = &self.thresholds;
        let thresholds =
            Thresholds::new(t.tau_lev, t.tau_jac, t.tau_cos).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(MatcherConfig {
            thresholds,
            granularity: t.jaccard_granularity,
        })
    }

    pub fn action_timeouts(&self) -> Vec<(ActionKind, u64)> {
        self.timeouts
            .iter()
            .filter_map(|(k, v)| parse_kind(k).ok().map(|k| (k, *v)))
            .collect()
    }
}

fn parse_kind(name: &str) -> Result<ActionKind, ConfigError> {
    ActionKind::ALL
        .iter()
        .copied()
        .find(|k| k.as_str() == name)
        .ok_or_else(|| ConfigError::Invalid(format!("unknown action kind `{name}` in [timeouts]")))
}
