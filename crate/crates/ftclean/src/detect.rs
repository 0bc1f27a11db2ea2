//! Noise detection: base prediction, the reasoning/reflection loop and the
//! consistency check that splits a dataset into clean and noisy parts.

use std::collections::BTreeMap;

use ftclean_core::{
    AgreementPattern, CheckerPolicy, Dataset, Expert, Prediction, Sample, Verdict,
};
use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::error::{Error, Result};
use crate::stage::{absorb, StageContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionRound {
    pub reasoning: String,
    /// `None` for the final round, whose reasoning is the prediction.
    pub reflection: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub sample_id: String,
    pub base_pred: Option<Prediction>,
    pub reas_pred: Option<Prediction>,
    pub reflection_trace: Vec<ReflectionRound>,
    pub pattern: Option<AgreementPattern>,
    pub verdict: Verdict,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub clean: Dataset,
    pub noisy: Dataset,
    pub records: BTreeMap<String, DetectionRecord>,
}

impl Partition {
    pub fn verdict(&self, id: &str) -> Option<Verdict> {
        self.records.get(id).map(|r| r.verdict)
    }
}

pub fn base_predict(ctx: &StageContext, sample: &Sample) -> Result<Prediction, BackendError> {
    ctx.complete(Expert::Base, ctx.prompts.task(&sample.query), ctx.answer_max_tokens, false)
}

/// `iterations` reasoning passes, each but the last followed by a reflection
/// that is fed into the next pass.
pub fn reasoning_predict(
    ctx: &StageContext,
    sample: &Sample,
    iterations: usize,
) -> Result<(Prediction, Vec<ReflectionRound>), BackendError> {
    if iterations == 0 {
        return Err(BackendError::Precondition("reflection iterations must be at least 1".into()));
    }
    let mut trace: Vec<ReflectionRound> = Vec::with_capacity(iterations);
    let mut previous: Option<(String, String)> = None;
    loop {
        let prompt = ctx
            .prompts
            .reasoning(&sample.query, previous.as_ref().map(|(r, f)| (r.as_str(), f.as_str())));
        let pred = ctx.complete(Expert::Reasoning, prompt, ctx.reasoning_max_tokens, false)?;
        if trace.len() + 1 == iterations {
            trace.push(ReflectionRound { reasoning: pred.text.clone(), reflection: None });
            return Ok((pred, trace));
        }
        let critique = ctx.complete(
            Expert::Reflection,
            ctx.prompts.reflection(&sample.query, &pred.text),
            ctx.reasoning_max_tokens,
            false,
        )?;
        trace.push(ReflectionRound {
            reasoning: pred.text.clone(),
            reflection: Some(critique.text.clone()),
        });
        previous = Some((pred.text, critique.text));
    }
}

fn detect_one(
    ctx: &StageContext,
    sample: &Sample,
    iterations: usize,
    policy: CheckerPolicy,
) -> Result<DetectionRecord, BackendError> {
    let mut errors = Vec::new();
    let base = absorb(base_predict(ctx, sample))?.map_err(|e| errors.push(format!("base: {e}"))).ok();
    let reasoning = absorb(reasoning_predict(ctx, sample, iterations))?
        .map_err(|e| errors.push(format!("reasoning: {e}")))
        .ok();
    let (reas_pred, reflection_trace) = match reasoning {
        Some((p, t)) => (Some(p), t),
        None => (None, Vec::new()),
    };
    let pattern = match (&base, &reas_pred) {
        (Some(b), Some(r)) if errors.is_empty() => {
            Some(AgreementPattern::observe(&sample.label, &b.text, &r.text, ctx.kind))
        }
        _ => None,
    };
    Ok(DetectionRecord {
        sample_id: sample.id.clone(),
        base_pred: base,
        reas_pred,
        reflection_trace,
        pattern,
        verdict: pattern.map_or(Verdict::Noisy, |p| policy.verdict(p)),
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    })
}

pub fn detect(
    ctx: &StageContext,
    ds: &Dataset,
    iterations: usize,
    policy: CheckerPolicy,
) -> Result<Partition> {
    if ds.is_empty() {
        return Err(Error::Precondition("cannot detect noise in an empty dataset".into()));
    }
    let records = ctx.run("detect", ds.samples(), |s| detect_one(ctx, s, iterations, policy))?;
    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    for (sample, record) in ds.iter().zip(&records) {
        if let Some(e) = &record.error {
            log::warn!("detect: sample {} routed to noisy: {e}", sample.id);
        }
        match record.verdict {
            Verdict::Clean => clean.push(sample.clone()),
            Verdict::Noisy => noisy.push(sample.clone()),
        }
    }
    Ok(Partition {
        clean: Dataset::new(ds.task_kind(), clean)?,
        noisy: Dataset::new(ds.task_kind(), noisy)?,
        records: records.into_iter().map(|r| (r.sample_id.clone(), r)).collect(),
    })
}
