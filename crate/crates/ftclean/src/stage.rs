//! Shared per-stage plumbing.

use ftclean_core::{Expert, Prediction, TaskKind};

use crate::backend::{Backend, BackendError, CompletionRequest};
use crate::error::Error;
use crate::prompts::PromptSet;
use crate::workers::{run_batch, BatchFailure};

/// Everything a stage needs to issue requests.
#[derive(Clone, Copy)]
pub struct StageContext<'a> {
    pub backend: &'a dyn Backend,
    pub prompts: &'a PromptSet,
    pub kind: TaskKind,
    pub concurrency: usize,
    pub answer_max_tokens: u32,
    pub reasoning_max_tokens: u32,
}

impl StageContext<'_> {
    /// Temperature-0 completion.
    pub fn complete(
        &self,
        expert: Expert,
        user_prompt: String,
        max_tokens: u32,
        want_logprobs: bool,
    ) -> Result<Prediction, BackendError> {
        let req = CompletionRequest {
            expert,
            system_prompt: self.prompts.system(),
            user_prompt,
            temperature: 0.0,
            max_tokens,
            want_logprobs,
        };
        self.backend.complete(&req)
    }

    /// Run a stage over `items`. Per-item closures absorb recoverable
    /// failures themselves; any error they return aborts the stage.
    pub fn run<T, R, F>(&self, stage: &'static str, items: &[T], f: F) -> Result<Vec<R>, Error>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Result<R, BackendError> + Sync,
    {
        let total = items.len();
        let step = (total / 10).max(1);
        let progress = std::sync::atomic::AtomicUsize::new(0);
        run_batch(items, self.concurrency, |_, item| {
            let r = f(item)?;
            let n = progress.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            if n.is_multiple_of(step) || n == total {
                log::debug!("{stage}: {n}/{total}");
            }
            Ok(r)
        })
        .map_err(|BatchFailure { done, error, .. }| Error::Stage { stage, done, total, source: error })
    }
}

/// Transport failures abort a stage; anything else is recorded per sample.
pub fn absorb<T>(result: Result<T, BackendError>) -> Result<Result<T, BackendError>, BackendError> {
    match result {
        Err(e) if e.is_retryable() => Err(e),
        other => Ok(other),
    }
}
