//! Service configuration: a TOML file plus environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use multirag_core::backend::RemoteConfig;
use multirag_core::{validate_config, PipelineConfig, ScoringWeights};

/// Environment variables read by [`ServiceConfig::apply_env`], with what
/// each one sets.
pub const ENV_VARS: [(&str, &str); 7] = [
    ("MULTIRAG_LISTEN", "listen address, e.g. 127.0.0.1:8080"),
    ("MULTIRAG_CORPUS", "corpus file (jsonl passages)"),
    ("MULTIRAG_INDEX", "BM25 index snapshot built by `multirag index`"),
    ("MULTIRAG_BACKEND_URL", "base URL of a remote model backend"),
    ("MULTIRAG_SCRIPT", "mock backend script (jsonl); takes precedence over the URL"),
    ("MULTIRAG_WEIGHTS", "default scoring weights as w1,w2,w3"),
    ("MULTIRAG_DATA_DIR", "directory holding persisted sessions"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub corpus: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub backend_url: Option<String>,
    pub script: Option<PathBuf>,
    pub data_dir: PathBuf,
    /// Defaults for new sessions; overrides posted with a session apply on top.
    pub pipeline: PipelineConfig,
    /// Connection settings for the remote backend. `base_url` is taken from
    /// `backend_url`.
    pub remote: RemoteConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            corpus: None,
            index: None,
            backend_url: None,
            script: None,
            data_dir: PathBuf::from("multirag-data"),
            pipeline: PipelineConfig::default(),
            remote: RemoteConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{var}: {message}")]
    Env { var: &'static str, message: String },
    #[error("pipeline defaults: {0}")]
    Pipeline(String),
}

fn parse_weights(s: &str) -> Result<ScoringWeights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [w1, w2, w3] => Ok(ScoringWeights::new(w1, w2, w3)),
        _ => Err(format!("expected three comma-separated numbers, got {}", parts.len())),
    }
}

impl ServiceConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(s)?)
    }

    /// Reads `path` when given, applies the process environment and
    /// validates the pipeline defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml_str(&text)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the variables in [`ENV_VARS`] found through `get`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get("MULTIRAG_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = get("MULTIRAG_CORPUS") {
            self.corpus = Some(v.into());
        }
        if let Some(v) = get("MULTIRAG_INDEX") {
            self.index = Some(v.into());
        }
        if let Some(v) = get("MULTIRAG_BACKEND_URL") {
            self.backend_url = Some(v);
        }
        if let Some(v) = get("MULTIRAG_SCRIPT") {
            self.script = Some(v.into());
        }
        if let Some(v) = get("MULTIRAG_WEIGHTS") {
            self.pipeline.weights = parse_weights(&v).map_err(|message| ConfigError::Env {
                var: "MULTIRAG_WEIGHTS",
                message,
            })?;
        }
        if let Some(v) = get("MULTIRAG_DATA_DIR") {
            self.data_dir = v.into();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = validate_config(&self.pipeline);
        if check.is_ok() {
            Ok(())
        } else {
            Err(ConfigError::Pipeline(check.to_string()))
        }
    }

    pub fn remote_config(&self) -> Option<RemoteConfig> {
        self.backend_url.as_ref().map(|url| RemoteConfig {
            base_url: url.clone(),
            ..self.remote.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_with_nested_pipeline() {
        let cfg = ServiceConfig::from_toml_str(
            "listen = \"0.0.0.0:9000\"\ncorpus = \"c.jsonl\"\n[pipeline]\ntop_k = 3\n[pipeline.weights]\nrelevance = 1.0\ngroundedness = 1.0\nutility = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.listen, "0.0.0.0:9000");
        assert_eq!(cfg.pipeline.top_k, 3);
        assert_eq!(cfg.pipeline.weights.utility, 1.0);
        assert_eq!(cfg.pipeline.weights.relevance, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ServiceConfig::from_toml_str("lisen = \"x\"").is_err());
    }

    #[test]
    fn environment_overrides_file() {
        let mut cfg = ServiceConfig::default();
        cfg.apply_env(|k| match k {
            "MULTIRAG_WEIGHTS" => Some("0, 0.5 ,2".into()),
            "MULTIRAG_SCRIPT" => Some("s.jsonl".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.pipeline.weights, ScoringWeights::new(0.0, 0.5, 2.0));
        assert_eq!(cfg.script, Some(PathBuf::from("s.jsonl")));
        assert_eq!(cfg.listen, "127.0.0.1:8080");
    }

    #[test]
    fn bad_weights_name_the_variable() {
        let err = ServiceConfig::default()
            .apply_env(|k| (k == "MULTIRAG_WEIGHTS").then(|| "1,2".to_string()))
            .unwrap_err();
        assert!(err.to_string().starts_with("MULTIRAG_WEIGHTS"));
    }
}
