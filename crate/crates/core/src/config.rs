//! Run configuration: TOML file, then command-line overrides.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{PromptSet, StepParams};
use crate::data::Strategy;
use crate::llm::{CachedBackend, ChatBackend, HttpBackend, HttpConfig, RetryPolicy, ScriptedBackend};
use crate::mining::AugmentOptions;

/// Vote count implied by a `-sc` strategy suffix.
pub const DEFAULT_SC_VOTES: usize = 9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// OpenAI-compatible chat-completions endpoint.
    Http,
    /// Rules from `script`.
    Scripted,
    /// Recorded responses from `cache_dir` only.
    Replay,
    /// No model: augmentation keeps the seeds, classification fails.
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Variable holding the API key; empty string disables auth.
    pub api_key_env: String,
    pub script: Option<PathBuf>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_secs: u64,
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        let retry = RetryPolicy::default();
        BackendConfig {
            kind: BackendKind::None,
            endpoint: None,
            model: None,
            api_key_env: "OPENAI_API_KEY".into(),
            script: None,
            timeout_secs: 120,
            max_attempts: retry.max_attempts,
            initial_backoff_ms: retry.initial_backoff.as_millis() as u64,
            max_backoff_secs: retry.max_backoff.as_secs(),
            max_in_flight: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub k: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        let o = AugmentOptions::new("");
        AugmentConfig {
            k: o.k,
            temperature: o.temperature,
            top_p: o.top_p,
            max_tokens: o.max_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendConfig,
    pub cache_dir: Option<PathBuf>,
    pub concurrency: usize,
    /// Overrides the strategy's default vote count.
    pub votes: Option<usize>,
    pub seed: u64,
    pub with_context: bool,
    pub prompt_dir: Option<PathBuf>,
    pub strategy: Option<String>,
    pub sampling: StepParams,
    pub augment: AugmentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendConfig::default(),
            cache_dir: None,
            concurrency: 4,
            votes: None,
            seed: 0,
            with_context: false,
            prompt_dir: None,
            strategy: None,
            sampling: StepParams::default(),
            augment: AugmentConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub concurrency: Option<usize>,
    pub votes: Option<usize>,
    pub with_context: bool,
    pub strategy: Option<String>,
    pub backend: Option<String>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Defaults, overlaid with `path` when given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.into(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|message| ConfigError::File {
            path: path.into(),
            message,
        })?;
        // Relative paths in the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.cache_dir, &mut cfg.prompt_dir, &mut cfg.backend.script]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.cache_dir {
            self.cache_dir = Some(d.clone());
        }
        if let Some(c) = o.concurrency {
            self.concurrency = c;
        }
        if let Some(v) = o.votes {
            self.votes = Some(v);
        }
        if o.with_context {
            self.with_context = true;
        }
        if let Some(s) = &o.strategy {
            self.strategy = Some(s.clone());
        }
        if let Some(m) = &o.model {
            self.backend.model = Some(m.clone());
        }
        if let Some(e) = &o.endpoint {
            self.backend.endpoint = Some(e.clone());
        }
        if let Some(b) = &o.backend {
            // `scripted:<path>` selects the scripted backend with that script.
            let (kind, arg) = b.split_once(':').map_or((b.as_str(), None), |(k, a)| (k, Some(a)));
            self.backend.kind = match kind {
                "http" => BackendKind::Http,
                "scripted" => BackendKind::Scripted,
                "replay" => BackendKind::Replay,
                "none" => BackendKind::None,
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "unknown backend {b:?} (http, scripted:<file>, replay, none)"
                    )))
                }
            };
            if let Some(a) = arg {
                self.backend.script = Some(a.into());
            }
        }
        Ok(())
    }

    pub fn model(&self) -> String {
        self.backend.model.clone().unwrap_or_else(|| match self.backend.kind {
            BackendKind::Http => String::new(),
            _ => "scripted".into(),
        })
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.backend.max_attempts.max(1),
            initial_backoff: Duration::from_millis(self.backend.initial_backoff_ms),
            multiplier: 2.0,
            max_backoff: Duration::from_secs(self.backend.max_backoff_secs),
        }
    }

    /// The configured backend, wrapped in the record/replay cache when
    /// `cache_dir` is set. `None` for `BackendKind::None`.
    pub fn build_backend(&self) -> Result<Option<Box<dyn ChatBackend>>, ConfigError> {
        let b = &self.backend;
        let base: Box<dyn ChatBackend> = match b.kind {
            BackendKind::None => return Ok(None),
            BackendKind::Replay => {
                let dir = self
                    .cache_dir
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("replay backend needs a cache directory".into()))?;
                let c = CachedBackend::replay_only(dir).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                return Ok(Some(Box::new(c)));
            }
            BackendKind::Scripted => {
                let path = b
                    .script
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("scripted backend needs a script file".into()))?;
                let s = ScriptedBackend::from_json_file(path).map_err(|message| ConfigError::File {
                    path: path.clone(),
                    message,
                })?;
                Box::new(s)
            }
            BackendKind::Http => {
                let endpoint = b
                    .endpoint
                    .clone()
                    .ok_or_else(|| ConfigError::Invalid("http backend needs an endpoint".into()))?;
                if b.model.is_none() {
                    return Err(ConfigError::Invalid("http backend needs a model name".into()));
                }
                let mut hc = HttpConfig::new(endpoint);
                hc.api_key_env = (!b.api_key_env.is_empty()).then(|| b.api_key_env.clone());
                hc.timeout = Duration::from_secs(b.timeout_secs);
                hc.retry = self.retry();
                hc.max_in_flight = b.max_in_flight;
                Box::new(HttpBackend::new(hc).map_err(|e| ConfigError::Invalid(e.to_string()))?)
            }
        };
        match &self.cache_dir {
            Some(dir) => {
                let c = CachedBackend::new(base, dir)
                    .map_err(|e| ConfigError::Invalid(format!("{}: {e}", dir.display())))?;
                Ok(Some(Box::new(c)))
            }
            None => Ok(Some(base)),
        }
    }

    pub fn prompts(&self) -> Result<PromptSet, ConfigError> {
        match &self.prompt_dir {
            Some(dir) => PromptSet::load_dir(dir).map_err(|e| ConfigError::Invalid(e.to_string())),
            None => Ok(PromptSet::builtin()),
        }
    }

    /// Augmentation settings; `augment_noun.txt` / `augment_verb.txt` in
    /// `prompt_dir` replace the built-in prompts.
    pub fn augment_options(&self) -> Result<AugmentOptions, ConfigError> {
        let mut o = AugmentOptions::new(self.model());
        o.k = self.augment.k;
        o.temperature = self.augment.temperature;
        o.top_p = self.augment.top_p;
        o.max_tokens = self.augment.max_tokens;
        if let Some(dir) = &self.prompt_dir {
            for (name, slot) in [
                ("augment_noun.txt", &mut o.noun_prompt),
                ("augment_verb.txt", &mut o.verb_prompt),
            ] {
                let path = dir.join(name);
                match std::fs::read_to_string(&path) {
                    Ok(text) => *slot = text.trim_end().to_string(),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                    Err(e) => {
                        return Err(ConfigError::File {
                            path,
                            message: e.to_string(),
                        })
                    }
                }
            }
        }
        Ok(o)
    }

    /// Strategy and vote count after applying the `-sc` default and `votes`.
    pub fn strategy_and_votes(&self) -> Result<(Strategy, usize), ConfigError> {
        let spec = self.strategy.as_deref().unwrap_or("cot2s");
        let (strategy, default_votes) = parse_strategy_spec(spec).map_err(ConfigError::Invalid)?;
        let n = self.votes.unwrap_or(default_votes);
        if n == 0 || n.is_multiple_of(2) {
            return Err(ConfigError::Invalid(format!(
                "vote count must be odd and positive, got {n}"
            )));
        }
        Ok((strategy, n))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// `basic`, `cot`, `cot2s`, each optionally suffixed with `-sc` for
/// self-consistency with the default vote count.
pub fn parse_strategy_spec(spec: &str) -> Result<(Strategy, usize), String> {
    let lower = spec.trim().to_ascii_lowercase();
    let (base, votes) = match lower.strip_suffix("-sc") {
        Some(b) => (b, DEFAULT_SC_VOTES),
        None => (lower.as_str(), 1),
    };
    base.parse::<Strategy>().map(|s| (s, votes)).map_err(|_| {
        let names: Vec<String> = Strategy::ALL
            .iter()
            .flat_map(|s| [s.to_string(), format!("{s}-sc")])
            .collect();
        format!("invalid strategy {spec:?}; valid strategies: {}", names.join(", "))
    })
}
