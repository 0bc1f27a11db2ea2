//! OpenAI-compatible HTTP backend.

use std::collections::BTreeMap;
use std::time::Duration;

use ftclean_core::{EmbeddingVector, Expert, Prediction, TokenLogprob};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{request_fingerprint, Backend, BackendError, CompletionRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpSettings {
    pub base_url: String,
    /// Explicit key; takes precedence over `api_key_env`.
    pub api_key: Option<String>,
    /// Environment variable holding the key.
    pub api_key_env: String,
    /// Model serving every role without an entry in `models`.
    pub model: String,
    /// Per-role model overrides keyed by role name.
    pub models: BTreeMap<String, String>,
    pub embedding_model: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    /// Whether the endpoint returns token logprobs.
    pub logprobs: bool,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            api_key_env: "OPENAI_API_KEY".into(),
            model: "gpt-4o-mini".into(),
            models: BTreeMap::new(),
            embedding_model: "text-embedding-3-small".into(),
            timeout_secs: 60,
            max_attempts: 3,
            backoff_base_ms: 500,
            backoff_max_ms: 8_000,
            logprobs: true,
        }
    }
}

impl HttpSettings {
    pub fn validate(&self) -> Result<(), String> {
        if self.base_url.trim().is_empty() {
            return Err("http.base_url must be set".into());
        }
        if self.max_attempts == 0 {
            return Err("http.max_attempts must be at least 1".into());
        }
        if self.timeout_secs == 0 {
            return Err("http.timeout_secs must be positive".into());
        }
        for role in self.models.keys() {
            if !Expert::ALL.iter().any(|e| e.as_str() == role) {
                return Err(format!("http.models: unknown role `{role}`"));
            }
        }
        Ok(())
    }
}

pub struct HttpBackend {
    settings: HttpSettings,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceLogprobs {
    content: Option<Vec<TokenLogprob>>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Result<Self, BackendError> {
        settings.validate().map_err(BackendError::Precondition)?;
        let api_key = settings
            .api_key
            .clone()
            .or_else(|| std::env::var(&settings.api_key_env).ok())
            .filter(|k| !k.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs))
            .build()
            .map_err(|e| BackendError::Precondition(format!("http client: {e}")))?;
        Ok(HttpBackend { settings, api_key, client })
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.settings.base_url.trim_end_matches('/'))
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let cap = self
            .settings
            .backoff_base_ms
            .saturating_mul(1u64 << (attempt - 1).min(20))
            .min(self.settings.backoff_max_ms);
        Duration::from_millis(rand::rng().random_range(0..=cap))
    }

    fn post(&self, path: &str, body: &serde_json::Value) -> Result<String, BackendError> {
        let url = self.url(path);
        let attempts = self.settings.max_attempts;
        let mut last = String::new();
        for attempt in 1..=attempts {
            let mut builder = self.client.post(&url).json(body);
            if let Some(key) = &self.api_key {
                builder = builder.bearer_auth(key);
            }
            match builder.send() {
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    if status.is_success() {
                        return Ok(text);
                    }
                    if !status.is_server_error() {
                        return Err(BackendError::Permanent {
                            status: status.as_u16(),
                            message: truncate(&text),
                        });
                    }
                    last = format!("status {}: {}", status.as_u16(), truncate(&text));
                }
                Err(e) => last = e.to_string(),
            }
            if attempt < attempts {
                log::debug!("{url}: attempt {attempt}/{attempts} failed: {last}");
                std::thread::sleep(self.backoff(attempt));
            }
        }
        Err(BackendError::Retryable { attempts, message: last })
    }
}

fn truncate(text: &str) -> String {
    const LIMIT: usize = 500;
    match text.char_indices().nth(LIMIT) {
        Some((i, _)) => format!("{}...", &text[..i]),
        None => text.to_string(),
    }
}

fn malformed(what: &str, detail: impl std::fmt::Display) -> BackendError {
    BackendError::Permanent { status: 200, message: format!("malformed {what} response: {detail}") }
}

impl Backend for HttpBackend {
    fn model_id(&self, expert: Expert) -> String {
        self.settings.models.get(expert.as_str()).unwrap_or(&self.settings.model).clone()
    }

    fn embedding_model_id(&self) -> String {
        self.settings.embedding_model.clone()
    }

    fn supports_logprobs(&self) -> bool {
        self.settings.logprobs
    }

    fn complete(&self, req: &CompletionRequest) -> Result<Prediction, BackendError> {
        let model = self.model_id(req.expert);
        let logprobs = req.want_logprobs && self.settings.logprobs;
        let mut body = json!({
            "model": model,
            "messages": [
                { "role": "system", "content": req.system_prompt },
                { "role": "user", "content": req.user_prompt },
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        if logprobs {
            body["logprobs"] = json!(true);
        }
        let text = self.post("chat/completions", &body)?;
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| malformed("chat", e))?;
        let choice = parsed.choices.into_iter().next().ok_or_else(|| malformed("chat", "no choices"))?;
        let token_logprobs = choice
            .logprobs
            .and_then(|l| l.content)
            .filter(|c| logprobs && !c.is_empty())
            .map(|c| {
                c.into_iter()
                    .map(|t| TokenLogprob { logprob: t.logprob.min(0.0), ..t })
                    .collect()
            });
        Ok(Prediction {
            text: choice.message.content.unwrap_or_default(),
            token_logprobs,
            expert: req.expert,
            request_fingerprint: request_fingerprint(req, &model),
        })
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::Precondition("cannot embed empty text".into()));
        }
        let body = json!({ "model": self.settings.embedding_model, "input": text });
        let raw = self.post("embeddings", &body)?;
        let parsed: EmbeddingResponse =
            serde_json::from_str(&raw).map_err(|e| malformed("embedding", e))?;
        let values = parsed.data.into_iter().next().ok_or_else(|| malformed("embedding", "no data"))?;
        EmbeddingVector::new(values.embedding).map_err(|e| malformed("embedding", e))
    }
}
