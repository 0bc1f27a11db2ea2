//! End-to-end orchestration: detect, index, denoise, select, assemble.
//!
//! Stages are barriers. [`Pipeline::prepare`] performs every backend call;
//! [`Prepared::finish`] is pure, so selection ratios can be swept cheaply.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use ftclean_core::{
    assemble_ft, CheckerPolicy, Dataset, EmbeddingIndex, ScoredSample, Selection, TaskKind,
};
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::denoise::{denoise, DenoiseRecord};
use crate::detect::{detect, Partition};
use crate::error::{Error, Result};
use crate::prompts::PromptSet;
use crate::retrieve::{build_index, index_key, load_index, save_index};
use crate::stage::StageContext;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub k: usize,
    pub beta: f64,
    pub iterations: usize,
    pub policy: CheckerPolicy,
    pub concurrency: usize,
    pub answer_max_tokens: u32,
    pub reasoning_max_tokens: u32,
    pub prompts: PromptSet,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            k: 3,
            beta: 0.5,
            iterations: 2,
            policy: CheckerPolicy::AnyMatch,
            concurrency: 8,
            answer_max_tokens: 64,
            reasoning_max_tokens: 512,
            prompts: PromptSet::default(),
        }
    }
}

pub fn validate_beta(beta: f64) -> Result<(), String> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(format!("beta must lie in (0, 1], got {beta}"))
    }
}

impl Settings {
    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        validate_beta(self.beta)?;
        if !(1..=4).contains(&self.iterations) {
            return Err(format!("reflection_iterations must lie in 1..=4, got {}", self.iterations));
        }
        if self.concurrency == 0 {
            return Err("concurrency must be at least 1".into());
        }
        if self.answer_max_tokens == 0 || self.reasoning_max_tokens == 0 {
            return Err("max token limits must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub detect_ms: f64,
    pub retrieve_ms: f64,
    pub denoise_ms: f64,
    pub select_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub struct Pipeline<'a> {
    backend: &'a dyn Backend,
    settings: &'a Settings,
    index_dir: Option<PathBuf>,
}

/// Everything up to (not including) selection.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub input: Dataset,
    pub partition: Partition,
    pub index_size: usize,
    pub relabeled: Dataset,
    pub denoise_records: BTreeMap<String, DenoiseRecord>,
    pub scored: Vec<ScoredSample>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct Curation {
    pub beta: f64,
    pub selection: Selection,
    pub selected: Dataset,
    pub ft: Dataset,
    pub select_ms: f64,
}

impl<'a> Pipeline<'a> {
    pub fn new(backend: &'a dyn Backend, settings: &'a Settings) -> Self {
        Pipeline { backend, settings, index_dir: None }
    }

    /// Persist and reuse clean-set indexes under `dir`.
    pub fn with_index_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.index_dir = Some(dir.into());
        self
    }

    fn context(&self, kind: TaskKind) -> StageContext<'a> {
        StageContext {
            backend: self.backend,
            prompts: &self.settings.prompts,
            kind,
            concurrency: self.settings.concurrency,
            answer_max_tokens: self.settings.answer_max_tokens,
            reasoning_max_tokens: self.settings.reasoning_max_tokens,
        }
    }

    fn index(&self, ctx: &StageContext, clean: &Dataset) -> Result<EmbeddingIndex> {
        let model = self.backend.embedding_model_id();
        let key = index_key(clean, &model);
        let path = self.index_dir.as_ref().map(|d| d.join(format!("{key}.jsonl")));
        if let Some(index) = path.as_deref().and_then(|p| load_index(p, &key, &model)) {
            log::info!("retrieve: reusing index of {} entries", index.len());
            return Ok(index);
        }
        let index = build_index(ctx, clean)?;
        if let Some(p) = &path {
            if let Err(e) = save_index(&index, &key, &model, p) {
                log::warn!("retrieve: could not persist index: {e}");
            }
        }
        Ok(index)
    }

    pub fn prepare(&self, input: &Dataset) -> Result<Prepared> {
        self.settings.validate().map_err(Error::Config)?;
        let kind = input.task_kind();
        let ctx = self.context(kind);

        let t = Instant::now();
        let partition = detect(&ctx, input, self.settings.iterations, self.settings.policy)?;
        let detect_ms = ms(t.elapsed());
        log::info!(
            "detect: {} clean, {} noisy in {detect_ms:.0} ms",
            partition.clean.len(),
            partition.noisy.len()
        );

        let t = Instant::now();
        let index = if partition.clean.is_empty() || partition.noisy.is_empty() {
            EmbeddingIndex::new(1)
        } else {
            self.index(&ctx, &partition.clean)?
        };
        let retrieve_ms = ms(t.elapsed());

        let t = Instant::now();
        let (relabeled, denoise_records) = denoise(
            &ctx,
            &partition.noisy,
            &partition.clean,
            &index,
            &partition.records,
            self.settings.k,
        )?;
        let denoise_ms = ms(t.elapsed());
        log::info!("denoise: {} relabeled in {denoise_ms:.0} ms", relabeled.len());

        let scored = relabeled
            .iter()
            .map(|s| {
                let r = &denoise_records[&s.id];
                ScoredSample { sample: s.clone(), entropy: r.entropy, token_count: r.token_count }
            })
            .collect();
        Ok(Prepared {
            input: input.clone(),
            index_size: index.len(),
            partition,
            relabeled,
            denoise_records,
            scored,
            timings: StageTimings { detect_ms, retrieve_ms, denoise_ms, select_ms: 0.0 },
        })
    }

    pub fn run(&self, input: &Dataset) -> Result<(Prepared, Curation)> {
        let prepared = self.prepare(input)?;
        let curation = prepared.finish(self.settings.beta)?;
        Ok((prepared, curation))
    }
}

impl Prepared {
    pub fn finish(&self, beta: f64) -> Result<Curation> {
        validate_beta(beta).map_err(Error::Config)?;
        let t = Instant::now();
        let kind = self.input.task_kind();
        let (selection, selected) = if self.scored.is_empty() {
            (Selection { kept: Vec::new(), cutoff: None }, Dataset::empty(kind))
        } else {
            let selection = Selection::compute(&self.scored, beta)?;
            let kept = selection.kept.iter().map(|&i| self.scored[i].sample.clone()).collect();
            (selection, Dataset::new(kind, kept)?)
        };
        let ft = assemble_ft(&self.partition.clean, &selected)?;
        let select_ms = ms(t.elapsed());
        log::info!("select: kept {} of {} relabeled", selected.len(), self.scored.len());
        Ok(Curation { beta, selection, selected, ft, select_ms })
    }
}
