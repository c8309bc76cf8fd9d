//! Run configuration: file loading, defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
use crate::entity_type::EntityType;
use crate::eval::DEFAULT_THRESHOLD;
use crate::llm::{Mode, WireApi, DEFAULT_MODEL};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config `{path}`: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub chunk_size: usize,
    pub overlap: usize,
    /// Resolution order; each type's output feeds the next.
    pub entity_types: Vec<EntityType>,
    pub gleaning: bool,
    pub strict_resolution: bool,

    pub mode: Mode,
    pub endpoint: Option<String>,
    pub api: WireApi,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub model: String,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub retries: u32,
    /// Replay source in replay mode, append target in record mode.
    pub fixture: Option<PathBuf>,
    /// Directory overriding the bundled prompt templates.
    pub prompts_dir: Option<PathBuf>,

    pub government_lexicon: Option<PathBuf>,
    pub noise_lexicon: Option<PathBuf>,
    pub noise_org_lexicon: Option<PathBuf>,
    pub overrides: Option<PathBuf>,

    pub workdir: PathBuf,
    pub dedup_threshold: f64,
    pub merge_case_sensitive: bool,
    /// Upper bound on concurrent documents and chunk requests; 0 = available cores.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            chunk_size: DEFAULT_CHUNK_SIZE,
            overlap: DEFAULT_OVERLAP,
            entity_types: EntityType::ALL.to_vec(),
            gleaning: true,
            strict_resolution: false,
            mode: Mode::Replay,
            endpoint: None,
            api: WireApi::OpenAi,
            api_key_env: None,
            model: DEFAULT_MODEL.to_string(),
            max_output_tokens: crate::llm::DEFAULT_MAX_OUTPUT,
            timeout_secs: 300,
            retries: 2,
            fixture: None,
            prompts_dir: None,
            government_lexicon: None,
            noise_lexicon: None,
            noise_org_lexicon: None,
            overrides: None,
            workdir: PathBuf::from("run"),
            dedup_threshold: DEFAULT_THRESHOLD,
            merge_case_sensitive: false,
            workers: 0,
        }
    }
}

impl RunConfig {
    /// Load a `.json` file, or TOML for any other extension. Relative paths
    /// inside the file are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |message: String| ConfigError::Parse { path: path.to_path_buf(), message };
        let mut config: RunConfig = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        config.validate()?;
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.fixture,
            &mut self.prompts_dir,
            &mut self.government_lexicon,
            &mut self.noise_lexicon,
            &mut self.noise_org_lexicon,
            &mut self.overrides,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.workdir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.chunk_size == 0 || self.chunk_size <= self.overlap {
            return bad(format!(
                "chunk_size ({}) must be positive and greater than overlap ({})",
                self.chunk_size, self.overlap
            ));
        }
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 100.0) {
            return bad(format!("dedup_threshold {} must be in (0, 100]", self.dedup_threshold));
        }
        if self.entity_types.is_empty() {
            return bad("entity_types must not be empty".into());
        }
        for (i, t) in self.entity_types.iter().enumerate() {
            if self.entity_types[..i].contains(t) {
                return bad(format!("entity type {t} listed twice"));
            }
        }
        if self.model.trim().is_empty() {
            return bad("model must not be empty".into());
        }
        Ok(())
    }

    /// Checks that only matter for stages that talk to a model.
    pub fn validate_llm(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        match self.mode {
            Mode::Replay if self.fixture.is_none() => bad("replay mode needs a fixture file"),
            Mode::Record if self.fixture.is_none() => bad("record mode needs a fixture file to write"),
            Mode::Live | Mode::Record if self.endpoint.is_none() => bad("live and record modes need an endpoint"),
            _ => Ok(()),
        }
    }
}
