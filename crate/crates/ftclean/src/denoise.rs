//! Relabeling of suspected-noisy samples.
//!
//! Each noisy sample gets a context-enhanced prediction from its nearest clean
//! exemplars, which is reconciled with the reasoning prediction from
//! detection. Only the query and the two candidate answers reach the
//! reviewer; the sample's own label never enters a prompt in this stage.
//!
//! The context prediction is also scored here so that selection can be
//! recomputed for any ratio without further backend calls. When logprobs are
//! unavailable the context prompt is re-issued asking for a verbal
//! confidence `c` in percent, scored as `-ln(c / 100)`.

use std::collections::BTreeMap;

use ftclean_core::{
    display_answer, entropy_score, normalize_answer, plan_review, resolve_contested, Dataset,
    EmbeddingIndex, Expert, Prediction, ReviewOutcome, ReviewPlan, Sample, Tag,
};
use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::detect::DetectionRecord;
use crate::error::Result;
use crate::stage::{absorb, StageContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreSource {
    Logprobs,
    VerbalConfidence,
    Unscored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseRecord {
    pub sample_id: String,
    /// Clean exemplars in retrieval order.
    pub context_ids: Vec<String>,
    pub cont_pred: Option<Prediction>,
    /// Normalized reasoning answer carried over from detection.
    pub reas_answer: String,
    pub review_raw: Option<String>,
    /// Display form of the final label; `None` when unresolvable.
    pub reviewed_label: Option<String>,
    pub outcome: ReviewOutcome,
    pub entropy: Option<f64>,
    pub token_count: usize,
    pub score_source: ScoreSource,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewResult {
    /// Normalized final answer.
    pub answer: Option<String>,
    pub outcome: ReviewOutcome,
    pub raw: Option<String>,
    pub error: Option<String>,
}

pub fn context_predict(
    ctx: &StageContext,
    sample: &Sample,
    exemplars: &[(&str, &str)],
) -> Result<Prediction, BackendError> {
    if exemplars.is_empty() {
        return Err(BackendError::Precondition("context prediction needs exemplars".into()));
    }
    ctx.complete(
        Expert::Context,
        ctx.prompts.context(&sample.query, exemplars),
        ctx.answer_max_tokens,
        true,
    )
}

/// Reconcile two normalized candidates (empty = unparseable).
pub fn review(
    ctx: &StageContext,
    sample: &Sample,
    context: &str,
    reasoning: &str,
) -> Result<ReviewResult, BackendError> {
    let done = |answer: Option<String>, outcome| ReviewResult { answer, outcome, raw: None, error: None };
    match plan_review(context, reasoning) {
        ReviewPlan::Agreed(a) => Ok(done(Some(a), ReviewOutcome::Agreed)),
        ReviewPlan::Single { answer, .. } => Ok(done(Some(answer), ReviewOutcome::SingleCandidate)),
        ReviewPlan::Unresolvable => Ok(done(None, ReviewOutcome::Unresolvable)),
        ReviewPlan::Contested { context, reasoning } => {
            let candidates = [display_answer(&context, ctx.kind), display_answer(&reasoning, ctx.kind)];
            let prompt = ctx
                .prompts
                .review(&sample.query, &[candidates[0].as_str(), candidates[1].as_str()]);
            match absorb(ctx.complete(Expert::Review, prompt, ctx.answer_max_tokens, false))? {
                Ok(p) => {
                    let (answer, outcome) = resolve_contested(&context, &p.answer(ctx.kind));
                    Ok(ReviewResult { answer: Some(answer), outcome, raw: Some(p.text), error: None })
                }
                Err(e) => Ok(ReviewResult {
                    answer: Some(context),
                    outcome: ReviewOutcome::Fallback,
                    raw: None,
                    error: Some(format!("review: {e}")),
                }),
            }
        }
    }
}

/// First integer following "confidence", as a fraction in `[0, 1]`.
pub fn parse_confidence(text: &str) -> Option<f64> {
    let lower = text.to_lowercase();
    let rest = &lower[lower.rfind("confidence")? + "confidence".len()..];
    let digits: String = rest
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    let n: u32 = digits.parse().ok()?;
    (n <= 100).then(|| f64::from(n) / 100.0)
}

/// Score the context prediction; falls back to a verbal confidence.
fn score(
    ctx: &StageContext,
    sample: &Sample,
    exemplars: &[(&str, &str)],
    cont: &Prediction,
) -> Result<(Option<f64>, usize, ScoreSource), BackendError> {
    if let Ok(h) = entropy_score(cont.token_logprobs.as_deref()) {
        let n = cont.token_logprobs.as_ref().map_or(0, Vec::len);
        return Ok((Some(h), n, ScoreSource::Logprobs));
    }
    let prompt = ctx.prompts.confidence(&sample.query, exemplars);
    let reply = absorb(ctx.complete(Expert::Confidence, prompt, ctx.answer_max_tokens, false))?;
    match reply.ok().and_then(|p| parse_confidence(&p.text)) {
        Some(c) => Ok((Some(-c.max(1e-6).ln()), 1, ScoreSource::VerbalConfidence)),
        None => Ok((None, 0, ScoreSource::Unscored)),
    }
}

fn relabeled(sample: &Sample, answer: &str, kind: ftclean_core::TaskKind) -> Sample {
    let mut out = sample.clone();
    out.label = display_answer(answer, kind);
    out.tags.remove(&Tag::Original);
    out.tags.insert(Tag::Relabeled);
    out
}

fn denoise_one(
    ctx: &StageContext,
    sample: &Sample,
    clean: &Dataset,
    index: &EmbeddingIndex,
    detection: Option<&DetectionRecord>,
    k: usize,
) -> Result<DenoiseRecord, BackendError> {
    let reas_answer = detection
        .and_then(|d| d.reas_pred.as_ref())
        .map(|p| p.answer(ctx.kind))
        .unwrap_or_default();
    let mut record = DenoiseRecord {
        sample_id: sample.id.clone(),
        context_ids: Vec::new(),
        cont_pred: None,
        reas_answer,
        review_raw: None,
        reviewed_label: None,
        outcome: ReviewOutcome::Unresolvable,
        entropy: None,
        token_count: 0,
        score_source: ScoreSource::Unscored,
        error: None,
    };
    let neighbors = match absorb(ctx.backend.embed(&sample.query))? {
        Ok(v) => index.knn(&v, k).map_err(|e| BackendError::Precondition(e.to_string())),
        Err(e) => Err(e),
    };
    let neighbors = match neighbors {
        Ok(n) => n,
        Err(e) => {
            record.error = Some(format!("retrieve: {e}"));
            return Ok(record);
        }
    };
    record.context_ids = neighbors.into_iter().map(|n| n.id).collect();
    let exemplars: Vec<(&str, &str)> = record
        .context_ids
        .iter()
        .filter_map(|id| clean.get(id))
        .map(|s| (s.query.as_str(), s.label.as_str()))
        .collect();

    let cont = match absorb(context_predict(ctx, sample, &exemplars))? {
        Ok(p) => p,
        Err(e) => {
            record.error = Some(format!("context: {e}"));
            return Ok(record);
        }
    };
    let result = review(ctx, sample, &cont.answer(ctx.kind), &record.reas_answer)?;
    record.outcome = result.outcome;
    record.review_raw = result.raw;
    record.error = result.error;
    record.reviewed_label = result.answer.map(|a| display_answer(&a, ctx.kind));
    if record.outcome.is_resolved() {
        let (entropy, n, source) = score(ctx, sample, &exemplars, &cont)?;
        record.entropy = entropy;
        record.token_count = n;
        record.score_source = source;
    }
    record.cont_pred = Some(cont);
    Ok(record)
}

/// Relabel every noisy sample. Unresolvable samples appear in the records
/// but not in the returned dataset.
pub fn denoise(
    ctx: &StageContext,
    noisy: &Dataset,
    clean: &Dataset,
    index: &EmbeddingIndex,
    detection: &BTreeMap<String, DetectionRecord>,
    k: usize,
) -> Result<(Dataset, BTreeMap<String, DenoiseRecord>)> {
    if noisy.is_empty() {
        return Ok((Dataset::empty(noisy.task_kind()), BTreeMap::new()));
    }
    if clean.is_empty() || index.is_empty() {
        log::warn!("denoise: no clean exemplars available; skipping {} noisy samples", noisy.len());
        return Ok((Dataset::empty(noisy.task_kind()), BTreeMap::new()));
    }
    let records = ctx.run("denoise", noisy.samples(), |s| {
        denoise_one(ctx, s, clean, index, detection.get(&s.id), k)
    })?;
    let mut out = Vec::new();
    for (sample, record) in noisy.iter().zip(&records) {
        if let Some(e) = &record.error {
            log::warn!("denoise: sample {}: {e}", sample.id);
        }
        if let Some(label) = &record.reviewed_label {
            out.push(relabeled(sample, &normalize_answer(label, ctx.kind), ctx.kind));
        }
    }
    Ok((
        Dataset::new(noisy.task_kind(), out)?,
        records.into_iter().map(|r| (r.sample_id.clone(), r)).collect(),
    ))
}
