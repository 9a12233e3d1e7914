//! Service configuration, read from TOML.
//!
//! ```toml
//! corpus = "data/fixture_corpus.jsonl"
//! snapshot = "target/fixture.snapshot.jsonl"
//! threshold = "calibrated:t2"   # or a number such as 0.613
//! limit = 10000
//! bind = "127.0.0.1:8080"
//!
//! [embedding]
//! kind = "hash"                 # or "remote"
//! dimension = 256
//!
//! [llm]
//! kind = "remote"               # or "scripted" with `script = "..."`
//! endpoint = "https://api.openai.com/v1/chat/completions"
//! model = "gpt-4o"
//! token_env = "LLM_API_TOKEN"
//! ```
//!
//! `${NAME}` anywhere in the file is replaced by the environment variable
//! `NAME` before parsing; an unset variable is an error. Relative paths are
//! resolved against the directory holding the config file.

use std::env;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nutrifilter_core::embeddings::{HashEmbedder, RemoteEmbedderConfig};
use nutrifilter_core::filtergen::RemoteLlmConfig;
use nutrifilter_core::store::DEFAULT_LIMIT;
use serde::{Deserialize, Deserializer};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("environment variable `{0}` is not set")]
    MissingVar(String),
    #[error("unterminated `${{` in config")]
    UnterminatedVar,
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid threshold `{0}`: expected a number in (0, 2] or calibrated:t1|t2|t3")]
    Threshold(String),
}

/// How the similarity threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSetting {
    Value(f64),
    /// Index 0, 1 or 2 into (mu - sigma, mu, mu + sigma) of the snapshot.
    Calibrated(usize),
}

impl Default for ThresholdSetting {
    fn default() -> Self {
        ThresholdSetting::Calibrated(1)
    }
}

impl FromStr for ThresholdSetting {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(which) = s.strip_prefix("calibrated:") {
            return match which {
                "t1" => Ok(ThresholdSetting::Calibrated(0)),
                "t2" => Ok(ThresholdSetting::Calibrated(1)),
                "t3" => Ok(ThresholdSetting::Calibrated(2)),
                _ => Err(ConfigError::Threshold(s.into())),
            };
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v <= 2.0 => Ok(ThresholdSetting::Value(v)),
            _ => Err(ConfigError::Threshold(s.into())),
        }
    }
}

impl fmt::Display for ThresholdSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdSetting::Value(v) => write!(f, "{v}"),
            ThresholdSetting::Calibrated(i) => write!(f, "calibrated:t{}", i + 1),
        }
    }
}

impl<'de> Deserialize<'de> for ThresholdSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Number(n) => n.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EmbeddingConfig {
    Hash {
        #[serde(default = "default_hash_dimension")]
        dimension: usize,
        #[serde(default)]
        seed: u64,
    },
    Remote {
        endpoint: String,
        model: String,
        #[serde(default = "default_remote_dimension")]
        dimension: usize,
        #[serde(default = "default_embed_token_env")]
        token_env: Option<String>,
        #[serde(default = "default_batch")]
        batch_size: usize,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_retries")]
        max_retries: u32,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

fn default_hash_dimension() -> usize {
    HashEmbedder::DEFAULT_DIMENSION
}

fn default_remote_dimension() -> usize {
    3072
}

fn default_embed_token_env() -> Option<String> {
    Some("EMBED_API_TOKEN".into())
}

fn default_llm_token_env() -> Option<String> {
    Some("LLM_API_TOKEN".into())
}

fn default_batch() -> usize {
    64
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

fn default_in_flight() -> usize {
    4
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::Hash {
            dimension: default_hash_dimension(),
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn remote_config(&self) -> Option<RemoteEmbedderConfig> {
        match self {
            EmbeddingConfig::Remote {
                endpoint,
                model,
                dimension,
                token_env,
                batch_size,
                ..
            } => Some(RemoteEmbedderConfig {
                endpoint: endpoint.clone(),
                model: model.clone(),
                dimension: *dimension,
                token_env: token_env.clone(),
                batch_size: *batch_size,
            }),
            EmbeddingConfig::Hash { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LlmConfig {
    Scripted {
        script: PathBuf,
    },
    Remote {
        endpoint: String,
        model: String,
        #[serde(default = "default_llm_token_env")]
        token_env: Option<String>,
        #[serde(default)]
        temperature: f64,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_retries")]
        max_retries: u32,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

impl LlmConfig {
    pub fn remote_config(&self) -> Option<RemoteLlmConfig> {
        match self {
            LlmConfig::Remote {
                endpoint,
                model,
                token_env,
                temperature,
                timeout_secs,
                max_retries,
                max_in_flight,
            } => Some(RemoteLlmConfig {
                endpoint: endpoint.clone(),
                model: model.clone(),
                token_env: token_env.clone(),
                temperature: *temperature,
                timeout_secs: *timeout_secs,
                max_retries: *max_retries,
                max_in_flight: *max_in_flight,
            }),
            LlmConfig::Scripted { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptPaths {
    pub strict: Option<PathBuf>,
    pub loose: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub snapshot: Option<PathBuf>,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub llm: Option<LlmConfig>,
    #[serde(default)]
    pub prompts: PromptPaths,
    #[serde(default)]
    pub threshold: ThresholdSetting,
    /// Seed for sampled calibration.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_limit")]
    pub limit: usize,
    #[serde(default = "default_bind")]
    pub bind: String,
}

fn default_limit() -> usize {
    DEFAULT_LIMIT
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            snapshot: None,
            embedding: EmbeddingConfig::default(),
            llm: None,
            prompts: PromptPaths::default(),
            threshold: ThresholdSetting::default(),
            seed: 0,
            limit: default_limit(),
            bind: default_bind(),
        }
    }
}

/// Replaces every `${NAME}` with the value of environment variable `NAME`.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').ok_or(ConfigError::UnterminatedVar)?;
        let name = &after[..end];
        out.push_str(&lookup(name).ok_or_else(|| ConfigError::MissingVar(name.into()))?);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl AppConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let text = interpolate(text, |name| env::var(name).ok())?;
        let mut config: AppConfig = toml::from_str(&text)?;
        config.resolve_paths(base_dir);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            self.corpus.as_mut(),
            self.snapshot.as_mut(),
            self.prompts.strict.as_mut(),
            self.prompts.loose.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let Some(LlmConfig::Scripted { script }) = self.llm.as_mut() {
            fix(script);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_parse() {
        assert_eq!(
            "0.613".parse::<ThresholdSetting>().unwrap(),
            ThresholdSetting::Value(0.613)
        );
        assert_eq!(
            "calibrated:t3".parse::<ThresholdSetting>().unwrap(),
            ThresholdSetting::Calibrated(2)
        );
        assert!("calibrated:t4".parse::<ThresholdSetting>().is_err());
        assert!("0".parse::<ThresholdSetting>().is_err());
        assert!("2.5".parse::<ThresholdSetting>().is_err());
    }

    #[test]
    fn full_config() {
        let text = r#"
            corpus = "data/corpus.jsonl"
            snapshot = "/abs/snap.jsonl"
            threshold = 0.6
            bind = "0.0.0.0:9000"

            [embedding]
            kind = "remote"
            endpoint = "http://localhost:1/embed"
            model = "text-embedding-3-large"

            [llm]
            kind = "scripted"
            script = "script.json"

            [prompts]
            strict = "p/strict.txt"
        "#;
        let c = AppConfig::parse(text, Path::new("/etc/nf")).unwrap();
        assert_eq!(c.corpus, Some(PathBuf::from("/etc/nf/data/corpus.jsonl")));
        assert_eq!(c.snapshot, Some(PathBuf::from("/abs/snap.jsonl")));
        assert_eq!(c.threshold, ThresholdSetting::Value(0.6));
        assert_eq!(
            c.llm,
            Some(LlmConfig::Scripted {
                script: "/etc/nf/script.json".into()
            })
        );
        let remote = c.embedding.remote_config().unwrap();
        assert_eq!(remote.dimension, 3072);
        assert_eq!(remote.token_env.as_deref(), Some("EMBED_API_TOKEN"));
        assert_eq!(c.prompts.strict, Some(PathBuf::from("/etc/nf/p/strict.txt")));
        assert_eq!(c.limit, DEFAULT_LIMIT);
    }

    #[test]
    fn defaults_when_empty() {
        let c = AppConfig::parse("", Path::new(".")).unwrap();
        assert_eq!(c, AppConfig::default());
    }

    #[test]
    fn unknown_keys_and_kinds_are_rejected() {
        assert!(AppConfig::parse("colour = 1", Path::new(".")).is_err());
        assert!(AppConfig::parse("[llm]\nkind = \"magic\"", Path::new(".")).is_err());
        assert!(AppConfig::parse("threshold = \"calibrated:t9\"", Path::new(".")).is_err());
    }

    #[test]
    fn interpolation() {
        let lookup = |n: &str| (n == "HOST").then(|| "example.org".to_string());
        assert_eq!(interpolate("a ${HOST} b", lookup).unwrap(), "a example.org b");
        assert!(matches!(interpolate("${NOPE}", lookup), Err(ConfigError::MissingVar(v)) if v == "NOPE"));
        assert!(matches!(
            interpolate("${HOST", lookup),
            Err(ConfigError::UnterminatedVar)
        ));
    }
}
