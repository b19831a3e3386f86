use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{Agent, AgentConfig, AgentError, BackendSettings, DebateContext};
use crate::domain::{extract_label_from_text, AgentResponse, PolicyLabel};
use crate::seed::sha256_hex;

pub const DEFAULT_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

/// Per-agent model selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveSettings {
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

/// Backend-wide live client options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveOptions {
    pub api_key_env: String,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    /// Mixed into every cache key. `None` draws a fresh nonce per backend
    /// instance, so a new run resamples instead of reusing cached bodies.
    pub cache_nonce: Option<String>,
    /// Leave the nonce out of cache keys so earlier bodies are served again.
    pub reuse_cache: bool,
    pub cache_dir: Option<PathBuf>,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self {
            api_key_env: DEFAULT_API_KEY_ENV.to_owned(),
            max_attempts: 3,
            backoff_ms: 500,
            max_in_flight: 4,
            cache_nonce: None,
            reuse_cache: false,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    pub response_format: Value,
}

fn response_format() -> Value {
    json!({
        "type": "json_schema",
        "json_schema": {
            "name": "policy_decision",
            "strict": true,
            "schema": {
                "type": "object",
                "properties": {
                    "label": {"type": "string", "enum": ["Raise", "Hold", "Lower"]},
                    "justification": {"type": "string"}
                },
                "required": ["label", "justification"],
                "additionalProperties": false
            }
        }
    })
}

/// Chat-completion body: the prompt as the only user message and a
/// response schema requiring `label` and `justification`.
pub fn live_request_payload(settings: &LiveSettings, prompt: &str) -> Result<ChatRequest, AgentError> {
    if settings.endpoint.trim().is_empty() {
        return Err(AgentError::Config("live endpoint is not set".into()));
    }
    if settings.model.trim().is_empty() {
        return Err(AgentError::Config("live model is not set".into()));
    }
    if prompt.trim().is_empty() {
        return Err(AgentError::Config("empty prompt".into()));
    }
    Ok(ChatRequest {
        model: settings.model.clone(),
        temperature: settings.temperature.unwrap_or(DEFAULT_TEMPERATURE),
        messages: vec![ChatMessage {
            role: "user".into(),
            content: prompt.to_owned(),
        }],
        response_format: response_format(),
    })
}

/// Pulls `{label, justification}` out of a chat-completion reply. A JSON
/// content body must carry both fields; plain-text content falls back to a
/// label scan and keeps the whole text as justification.
pub fn parse_chat_reply(body: &Value) -> Result<AgentResponse, AgentError> {
    let content = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| AgentError::Parse("reply has no choices[0].message.content".into()))?;
    match serde_json::from_str::<Value>(content) {
        Ok(Value::Object(obj)) => {
            let label: PolicyLabel = obj
                .get("label")
                .and_then(Value::as_str)
                .ok_or_else(|| AgentError::Parse("missing label".into()))?
                .parse()
                .map_err(|e: crate::domain::DomainError| AgentError::Parse(e.to_string()))?;
            let justification = obj
                .get("justification")
                .and_then(Value::as_str)
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| AgentError::Parse("missing justification".into()))?;
            Ok(AgentResponse::new(label, justification))
        }
        _ => {
            let label = extract_label_from_text(content).map_err(|e| AgentError::Parse(e.to_string()))?;
            Ok(AgentResponse::new(label, content.trim()))
        }
    }
}

/// Content address of a request.
pub fn cache_key(prompt: &str, model: &str, temperature: f64, agent_index: usize, round: usize, nonce: Option<&str>) -> String {
    let key = json!({
        "prompt": prompt,
        "model": model,
        "temperature": temperature,
        "agent": agent_index,
        "round": round,
        "nonce": nonce,
    });
    sha256_hex(&key.to_string())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct TransportError(pub String);

/// One HTTP round trip. Implementations must be thread-safe.
pub trait ChatTransport: Send + Sync {
    fn post(&self, endpoint: &str, api_key: &str, request: &ChatRequest) -> Result<Value, TransportError>;
}

#[cfg(feature = "http")]
#[derive(Debug, Clone)]
pub struct HttpTransport {
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).build();
        Self { agent: config.into() }
    }
}

#[cfg(feature = "http")]
impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(120))
    }
}

#[cfg(feature = "http")]
impl ChatTransport for HttpTransport {
    fn post(&self, endpoint: &str, api_key: &str, request: &ChatRequest) -> Result<Value, TransportError> {
        let mut resp = self
            .agent
            .post(endpoint)
            .header("Authorization", &format!("Bearer {api_key}"))
            .send_json(request)
            .map_err(|e| TransportError(e.to_string()))?;
        resp.body_mut().read_json::<Value>().map_err(|e| TransportError(e.to_string()))
    }
}

struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut active = self.active.lock().expect("in-flight lock");
        while *active >= self.limit {
            active = self.freed.wait(active).expect("in-flight lock");
        }
        *active += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.active.lock().expect("in-flight lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// Chat-completion agent backend with bounded retries, one reprompt on
/// unparseable replies, and a content-addressed response cache.
pub struct LiveBackend {
    transport: Box<dyn ChatTransport>,
    api_key: String,
    options: LiveOptions,
    nonce: Option<String>,
    cache: Mutex<HashMap<String, Value>>,
    in_flight: InFlight,
}

fn fresh_nonce() -> String {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or_default();
    sha256_hex(&format!("{now}:{}", std::process::id()))[..16].to_owned()
}

impl LiveBackend {
    /// Reads the API key from `options.api_key_env`; fails before any
    /// request is made if it is missing.
    pub fn from_env(options: LiveOptions, transport: Box<dyn ChatTransport>) -> Result<Self, AgentError> {
        let api_key = std::env::var(&options.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| AgentError::Config(format!("environment variable {} is not set", options.api_key_env)))?;
        Self::new(options, api_key, transport)
    }

    pub fn new(options: LiveOptions, api_key: String, transport: Box<dyn ChatTransport>) -> Result<Self, AgentError> {
        if options.max_attempts == 0 || options.max_in_flight == 0 {
            return Err(AgentError::Config("max_attempts and max_in_flight must be positive".into()));
        }
        let limit = options.max_in_flight;
        let nonce = if options.reuse_cache {
            None
        } else {
            Some(options.cache_nonce.clone().unwrap_or_else(fresh_nonce))
        };
        Ok(Self {
            transport,
            api_key,
            options,
            nonce,
            cache: Mutex::new(HashMap::new()),
            in_flight: InFlight {
                limit,
                active: Mutex::new(0),
                freed: Condvar::new(),
            },
        })
    }

    fn cache_get(&self, key: &str) -> Option<Value> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(key) {
            return Some(v.clone());
        }
        let dir = self.options.cache_dir.as_ref()?;
        let text = std::fs::read_to_string(dir.join(format!("{key}.json"))).ok()?;
        let value: Value = serde_json::from_str(&text).ok()?;
        self.cache.lock().expect("cache lock").insert(key.to_owned(), value.clone());
        Some(value)
    }

    fn cache_put(&self, key: &str, body: &Value) {
        self.cache.lock().expect("cache lock").insert(key.to_owned(), body.clone());
        if let Some(dir) = &self.options.cache_dir {
            let write = std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(dir.join(format!("{key}.json")), body.to_string()));
            if let Err(e) = write {
                log::warn!("could not write cache entry {key}: {e}");
            }
        }
    }

    fn send_with_retries(&self, endpoint: &str, request: &ChatRequest) -> Result<Value, AgentError> {
        let _permit = self.in_flight.acquire();
        let mut last_err = String::new();
        for attempt in 0..self.options.max_attempts {
            match self.transport.post(endpoint, &self.api_key, request) {
                Ok(body) => return Ok(body),
                Err(e) => {
                    log::warn!("chat request attempt {} failed: {e}", attempt + 1);
                    last_err = e.0;
                    if attempt + 1 < self.options.max_attempts && self.options.backoff_ms > 0 {
                        std::thread::sleep(Duration::from_millis(self.options.backoff_ms << attempt));
                    }
                }
            }
        }
        Err(AgentError::BackendUnavailable(format!(
            "{} attempts failed, last error: {last_err}",
            self.options.max_attempts
        )))
    }
}

impl Agent for LiveBackend {
    fn respond(&self, config: &AgentConfig, ctx: &DebateContext<'_>) -> Result<AgentResponse, AgentError> {
        ctx.check()?;
        let BackendSettings::Live(settings) = &config.backend else {
            return Err(AgentError::Config(format!(
                "agent {} is configured for {}, not live",
                config.agent_index,
                config.backend.kind()
            )));
        };
        let request = live_request_payload(settings, ctx.prompt)?;
        let key = cache_key(
            ctx.prompt,
            &request.model,
            request.temperature,
            config.agent_index,
            ctx.round,
            self.nonce.as_deref(),
        );
        if let Some(body) = self.cache_get(&key) {
            if let Ok(resp) = parse_chat_reply(&body) {
                return Ok(resp);
            }
        }
        let mut last_parse = None;
        for _ in 0..2 {
            let body = self.send_with_retries(&settings.endpoint, &request)?;
            match parse_chat_reply(&body) {
                Ok(resp) => {
                    self.cache_put(&key, &body);
                    return Ok(resp);
                }
                Err(e) => {
                    log::warn!("agent {} round {}: {e}; reprompting", config.agent_index, ctx.round);
                    last_parse = Some(e);
                }
            }
        }
        Err(last_parse.expect("loop ran at least once"))
    }
}
