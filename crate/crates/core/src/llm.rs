//! Completion gateway: live HTTP endpoints, record mode and deterministic replay.
//!
//! Every model call in the pipeline goes through [`Gateway`]. Replay fixtures
//! are JSON-lines files keyed by a SHA-256 fingerprint of `(model, prompt)`.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const DEFAULT_MODEL: &str = "llama3.3:70b";
pub const DEFAULT_MAX_OUTPUT: u32 = 4096;
/// Appended to a prompt when the previous answer was not parseable JSON.
pub const JSON_REMINDER: &str = "Return only valid JSON.";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("no replay fixture for fingerprint {fingerprint}")]
    FixtureMiss { fingerprint: String },
    #[error("could not parse a JSON object from model output: {0}")]
    ParseFailure(String),
    #[error("model returned an empty response")]
    EmptyResponse,
    #[error("fixture file `{path}`: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error("fixture I/O on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub model: String,
    pub max_output: u32,
}

impl CompletionRequest {
    pub fn new(model: &str, prompt: impl Into<String>, max_output: u32) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            temperature: 0.0,
            model: model.to_string(),
            max_output,
        }
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.model, &self.prompt)
    }
}

/// Temperature is deliberately excluded; pipeline requests always use 0.
pub fn fingerprint(model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError>;
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub fingerprint: String,
    pub model: String,
    pub prompt: String,
    pub response: String,
}

impl FixtureEntry {
    pub fn new(req: &CompletionRequest, response: &str) -> Self {
        FixtureEntry {
            fingerprint: req.fingerprint(),
            model: req.model.clone(),
            prompt: req.prompt.clone(),
            response: response.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReplayFixture {
    entries: HashMap<String, FixtureEntry>,
}

impl ReplayFixture {
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let file = File::open(path).map_err(|source| LlmError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut fixture = ReplayFixture::default();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| LlmError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: FixtureEntry = serde_json::from_str(&line).map_err(|e| LlmError::Fixture {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", lineno + 1),
            })?;
            // Later lines override earlier ones, matching append-only recording.
            fixture.entries.insert(entry.fingerprint.clone(), entry);
        }
        Ok(fixture)
    }

    pub fn insert(&mut self, entry: FixtureEntry) {
        self.entries.insert(entry.fingerprint.clone(), entry);
    }

    pub fn get(&self, fingerprint: &str) -> Option<&FixtureEntry> {
        self.entries.get(fingerprint)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Write all entries sorted by fingerprint, one JSON object per line.
    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let sorted: BTreeMap<_, _> = self.entries.iter().collect();
        let mut out = String::new();
        for entry in sorted.values() {
            out.push_str(&serde_json::to_string(entry).expect("fixture entries serialize"));
            out.push('\n');
        }
        fs::write(path, out).map_err(|source| LlmError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub struct ReplayBackend {
    fixture: ReplayFixture,
}

impl ReplayBackend {
    pub fn new(fixture: ReplayFixture) -> Self {
        ReplayBackend { fixture }
    }

    pub fn from_path(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::new(ReplayFixture::load(path)?))
    }
}

impl LlmBackend for ReplayBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let fingerprint = req.fingerprint();
        self.fixture
            .get(&fingerprint)
            .map(|e| e.response.clone())
            .ok_or(LlmError::FixtureMiss { fingerprint })
    }
}

/// Forwards to a live backend and appends every exchange to a fixture file.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    file: Mutex<File>,
}

impl<B: LlmBackend> RecordingBackend<B> {
    pub fn new(inner: B, path: &Path) -> Result<Self, LlmError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| LlmError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| LlmError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(RecordingBackend {
            inner,
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn record(&self, req: &CompletionRequest, response: &str) -> Result<FixtureEntry, LlmError> {
        let entry = FixtureEntry::new(req, response);
        let mut line = serde_json::to_string(&entry).expect("fixture entries serialize");
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|source| LlmError::Io {
                path: self.path.clone(),
                source,
            })?;
        Ok(entry)
    }
}

impl<B: LlmBackend> LlmBackend for RecordingBackend<B> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let response = self.inner.complete(req)?;
        self.record(req, &response)?;
        Ok(response)
    }
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

/// Request/response shape spoken by the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireApi {
    /// `POST {base}/chat/completions`
    #[default]
    OpenAi,
    /// `POST {base}/api/chat` with `stream: false`
    Ollama,
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api: WireApi,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint: "http://localhost:11434/v1".to_string(),
            api: WireApi::OpenAi,
            api_key: None,
            timeout: Duration::from_secs(300),
            retries: 2,
            backoff: Duration::from_millis(500),
        }
    }
}

pub struct HttpBackend {
    agent: ureq::Agent,
    config: HttpConfig,
}

#[derive(Deserialize)]
struct OpenAiResponse {
    choices: Vec<OpenAiChoice>,
}

#[derive(Deserialize)]
struct OpenAiChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct OllamaResponse {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend { agent, config }
    }

    pub fn url(&self) -> String {
        let base = self.config.endpoint.trim_end_matches('/');
        match self.config.api {
            WireApi::OpenAi if base.ends_with("/chat/completions") => base.to_string(),
            WireApi::OpenAi => format!("{base}/chat/completions"),
            WireApi::Ollama if base.ends_with("/api/chat") => base.to_string(),
            WireApi::Ollama => format!("{base}/api/chat"),
        }
    }

    fn body(&self, req: &CompletionRequest) -> Value {
        let messages = serde_json::json!([{ "role": "user", "content": req.prompt }]);
        match self.config.api {
            WireApi::OpenAi => serde_json::json!({
                "model": req.model,
                "messages": messages,
                "temperature": req.temperature,
                "max_tokens": req.max_output,
            }),
            WireApi::Ollama => serde_json::json!({
                "model": req.model,
                "messages": messages,
                "stream": false,
                "options": { "temperature": req.temperature, "num_predict": req.max_output },
            }),
        }
    }

    fn attempt(&self, url: &str, body: &Value) -> Result<String, LlmError> {
        let mut request = self.agent.post(url);
        if let Some(key) = &self.config.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request.send_json(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => LlmError::Timeout(self.config.timeout),
            other => LlmError::Transport(other.to_string()),
        })?;
        let status = response.status();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Transport(format!("HTTP {status}: {}", truncate(&text, 200))));
        }
        let content = match self.config.api {
            WireApi::OpenAi => serde_json::from_str::<OpenAiResponse>(&text)
                .ok()
                .and_then(|r| r.choices.into_iter().next())
                .and_then(|c| c.message.content),
            WireApi::Ollama => serde_json::from_str::<OllamaResponse>(&text)
                .ok()
                .and_then(|r| r.message.content),
        };
        content.ok_or_else(|| LlmError::Transport(format!("unexpected response body: {}", truncate(&text, 200))))
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let url = self.url();
        let body = self.body(req);
        let mut last = None;
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff * attempt);
            }
            match self.attempt(&url, &body) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::warn!("completion attempt {} against {url} failed: {e}", attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    #[default]
    Replay,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(format!("unknown LLM mode `{other}` (expected live, record or replay)")),
        }
    }
}

pub struct Gateway {
    backend: Box<dyn LlmBackend>,
    model: String,
    max_output: u32,
    json_retries: u32,
}

impl Gateway {
    pub fn new(backend: Box<dyn LlmBackend>, model: impl Into<String>) -> Self {
        Gateway {
            backend,
            model: model.into(),
            max_output: DEFAULT_MAX_OUTPUT,
            json_retries: 2,
        }
    }

    pub fn with_max_output(mut self, max_output: u32) -> Self {
        self.max_output = max_output;
        self
    }

    pub fn with_json_retries(mut self, retries: u32) -> Self {
        self.json_retries = retries;
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn request(&self, prompt: &str) -> CompletionRequest {
        CompletionRequest::new(&self.model, prompt, self.max_output)
    }

    pub fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.backend.complete(&self.request(prompt))
    }

    /// Complete and parse a JSON object, re-asking with [`JSON_REMINDER`]
    /// appended when the answer cannot be parsed.
    pub fn complete_json(&self, prompt: &str) -> Result<Value, LlmError> {
        let mut last = None;
        for attempt in 0..=self.json_retries {
            let prompt = if attempt == 0 {
                prompt.to_string()
            } else {
                format!("{prompt}\n\n{JSON_REMINDER}")
            };
            let raw = self.complete(&prompt)?;
            match parse_json_object(&raw) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    log::warn!("unparseable JSON from model (attempt {}): {e}", attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

// ---------------------------------------------------------------------------
// JSON repair
// ---------------------------------------------------------------------------

/// Pull the first well-formed JSON value out of free-form model output.
///
/// Tries, in order: the whole trimmed string, the contents of each fenced
/// code block, each balanced `{...}` span, and finally the span between the
/// first `{` and the last `}`.
pub fn parse_json_object(raw: &str) -> Result<Value, LlmError> {
    let trimmed = raw.trim();
    if let Ok(v) = serde_json::from_str::<Value>(trimmed) {
        return Ok(v);
    }
    for block in fenced_blocks(trimmed) {
        if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(block.trim()) {
            return Ok(v);
        }
    }
    for (start, _) in trimmed.match_indices('{') {
        if let Some(end) = balanced_end(&trimmed[start..]) {
            if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(&trimmed[start..start + end]) {
                return Ok(v);
            }
        }
    }
    if let (Some(first), Some(last)) = (trimmed.find('{'), trimmed.rfind('}')) {
        if first < last {
            if let Ok(v) = serde_json::from_str::<Value>(&trimmed[first..=last]) {
                return Ok(v);
            }
        }
    }
    Err(LlmError::ParseFailure(truncate(trimmed, 120).to_string()))
}

fn fenced_blocks(s: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = s;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // skip an info string such as `json`
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                blocks.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => {
                blocks.push(body);
                break;
            }
        }
    }
    blocks
}

/// Byte length of the balanced object starting at `s[0] == '{'`, honoring strings.
fn balanced_end(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if in_string {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}
