//! Inference backends: chat completion (optionally with token logprobs) and
//! text embedding behind one trait.
//!
//! - [`SimulatedBackend`]: deterministic, ground-truth-aware oracle for tests
//!   and the evaluation harness
//! - [`HttpBackend`]: OpenAI-compatible `/chat/completions` and `/embeddings`
//! - [`CachedBackend`]: on-disk response cache around any backend
//! - [`Instrumented`]: call counting and prompt capture

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use ftclean_core::{EmbeddingVector, Expert, Prediction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

mod cache;
mod http;
mod simulated;

pub use cache::CachedBackend;
pub use http::{HttpBackend, HttpSettings};
pub use simulated::{Fact, Knowledge, ReviewerMode, SimSettings, SimulatedBackend};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub expert: Expert,
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub want_logprobs: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    /// Transport or server-side failure that persisted through every attempt.
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Retryable { attempts: u32, message: String },
    #[error("request rejected (status {status}): {message}")]
    Permanent { status: u16, message: String },
    #[error("invalid request: {0}")]
    Precondition(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Retryable { .. })
    }
}

pub trait Backend: Send + Sync {
    /// Model identifier serving `expert`; part of every cache key.
    fn model_id(&self, expert: Expert) -> String;

    fn embedding_model_id(&self) -> String;

    fn supports_logprobs(&self) -> bool;

    fn complete(&self, req: &CompletionRequest) -> Result<Prediction, BackendError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError>;
}

macro_rules! forward_backend {
    ($($ty:ty),*) => {$(
        impl<B: Backend + ?Sized> Backend for $ty {
            fn model_id(&self, expert: Expert) -> String { (**self).model_id(expert) }
            fn embedding_model_id(&self) -> String { (**self).embedding_model_id() }
            fn supports_logprobs(&self) -> bool { (**self).supports_logprobs() }
            fn complete(&self, req: &CompletionRequest) -> Result<Prediction, BackendError> {
                (**self).complete(req)
            }
            fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
                (**self).embed(text)
            }
        }
    )*};
}

forward_backend!(Box<B>, Arc<B>, &B);

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Cache key of a completion: prompts, sampling parameters, role and model.
pub fn request_fingerprint(req: &CompletionRequest, model: &str) -> String {
    let canonical = serde_json::json!({
        "kind": "completion",
        "model": model,
        "expert": req.expert,
        "system": req.system_prompt,
        "user": req.user_prompt,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
        "logprobs": req.want_logprobs,
    });
    sha256_hex(canonical.to_string().as_bytes())
}

pub fn embedding_fingerprint(text: &str, model: &str) -> String {
    let canonical = serde_json::json!({ "kind": "embedding", "model": model, "text": text });
    sha256_hex(canonical.to_string().as_bytes())
}

/// Wraps a backend to count calls and optionally capture every request.
pub struct Instrumented<B> {
    inner: B,
    completions: AtomicUsize,
    embeddings: AtomicUsize,
    captured: Option<Mutex<Vec<CompletionRequest>>>,
}

impl<B: Backend> Instrumented<B> {
    pub fn new(inner: B) -> Self {
        Instrumented {
            inner,
            completions: AtomicUsize::new(0),
            embeddings: AtomicUsize::new(0),
            captured: None,
        }
    }

    pub fn capturing(inner: B) -> Self {
        Instrumented { captured: Some(Mutex::new(Vec::new())), ..Instrumented::new(inner) }
    }

    pub fn completion_calls(&self) -> usize {
        self.completions.load(Ordering::SeqCst)
    }

    pub fn embedding_calls(&self) -> usize {
        self.embeddings.load(Ordering::SeqCst)
    }

    pub fn total_calls(&self) -> usize {
        self.completion_calls() + self.embedding_calls()
    }

    pub fn calls_for(&self, expert: Expert) -> usize {
        self.captured_requests().iter().filter(|r| r.expert == expert).count()
    }

    /// Captured requests in arrival order (empty unless built with `capturing`).
    pub fn captured_requests(&self) -> Vec<CompletionRequest> {
        self.captured
            .as_ref()
            .map(|c| c.lock().expect("capture lock").clone())
            .unwrap_or_default()
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Backend> Backend for Instrumented<B> {
    fn model_id(&self, expert: Expert) -> String {
        self.inner.model_id(expert)
    }

    fn embedding_model_id(&self) -> String {
        self.inner.embedding_model_id()
    }

    fn supports_logprobs(&self) -> bool {
        self.inner.supports_logprobs()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<Prediction, BackendError> {
        self.completions.fetch_add(1, Ordering::SeqCst);
        if let Some(c) = &self.captured {
            c.lock().expect("capture lock").push(req.clone());
        }
        self.inner.complete(req)
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        self.embeddings.fetch_add(1, Ordering::SeqCst);
        self.inner.embed(text)
    }
}
