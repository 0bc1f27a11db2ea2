//! Deterministic ground-truth-aware oracle backend.
//!
//! Every decision is a seeded hash of `(sample id, role)`, so a response is a
//! pure function of `(settings, request)`:
//!
//! - an answering role returns the ground truth when
//!   `u(id, role) < oracle_accuracy`, otherwise a distractor chosen by
//!   `h(id, role/distractor)`; a separate draw makes the answer unparseable
//!   with probability `unparseable_rate`
//! - with logprobs on, token `j` of a response gets
//!   `-scale · u(id, role/lp/j)`, where `scale` is `confident_scale` for a
//!   correct answer and `uncertain_scale` otherwise
//! - reflections never answer; `EchoFirst` reviewers copy candidate 1
//! - embeddings are signed feature hashes of character trigrams, L2-normalized
//!
//! The target sample is found through the last `<question>` block of the user
//! prompt, which every default template emits.

use std::collections::HashMap;

use ftclean_core::answer::OPTION_LETTERS;
use ftclean_core::{
    display_answer, normalize_answer, option_count, Dataset, EmbeddingVector, Expert, Prediction,
    TaskKind, TokenLogprob,
};
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::{request_fingerprint, Backend, BackendError, CompletionRequest};
use crate::prompts::{candidate_block, last_tag_block};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewerMode {
    /// The reviewer answers like any other expert.
    #[default]
    Independent,
    /// The reviewer returns the first candidate verbatim.
    EchoFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub seed: u64,
    pub oracle_accuracy: f64,
    pub embedding_dim: usize,
    pub logprobs: bool,
    pub reviewer: ReviewerMode,
    pub confident_scale: f64,
    pub uncertain_scale: f64,
    pub unparseable_rate: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            seed: 0,
            oracle_accuracy: 0.85,
            embedding_dim: 64,
            logprobs: true,
            reviewer: ReviewerMode::Independent,
            confident_scale: 0.5,
            uncertain_scale: 1.5,
            unparseable_rate: 0.0,
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.oracle_accuracy) {
            return Err(format!("oracle_accuracy must lie in [0, 1], got {}", self.oracle_accuracy));
        }
        if !unit(self.unparseable_rate) {
            return Err(format!("unparseable_rate must lie in [0, 1], got {}", self.unparseable_rate));
        }
        if self.embedding_dim == 0 {
            return Err("embedding_dim must be positive".into());
        }
        if !(self.confident_scale >= 0.0 && self.uncertain_scale >= 0.0) {
            return Err("logprob scales must be non-negative".into());
        }
        Ok(())
    }
}

/// What the simulator knows about one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Fact {
    pub id: String,
    /// Correct answer in display form.
    pub answer: String,
    /// Wrong answers in display form; never empty.
    pub distractors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Knowledge {
    kind: TaskKind,
    options: usize,
    facts: HashMap<String, Fact>,
}

impl Knowledge {
    pub fn empty(kind: TaskKind) -> Self {
        Knowledge { kind, options: 4, facts: HashMap::new() }
    }

    /// Facts for every sample that carries a ground truth. Distractors are
    /// the other option letters for multiple-choice data and up to three
    /// other distinct ground truths otherwise.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let kind = ds.task_kind();
        let options = option_count(ds);
        let mut pool: Vec<String> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for s in ds {
            if let Some(t) = &s.ground_truth {
                let norm = normalize_answer(t, kind);
                if !norm.is_empty() && seen.insert(norm.clone()) {
                    pool.push(display_answer(&norm, kind));
                }
            }
        }
        let mut facts = HashMap::new();
        for s in ds {
            let Some(truth) = &s.ground_truth else { continue };
            let norm = normalize_answer(truth, kind);
            if norm.is_empty() {
                continue;
            }
            let answer = display_answer(&norm, kind);
            let distractors = match kind {
                TaskKind::MultipleChoice => option_distractors(&norm, options),
                _ => pool_distractors(&s.id, &answer, &pool),
            };
            facts
                .entry(s.query.trim().to_string())
                .or_insert(Fact { id: s.id.clone(), answer, distractors });
        }
        Knowledge { kind, options, facts }
    }

    pub fn task_kind(&self) -> TaskKind {
        self.kind
    }

    pub fn insert(&mut self, query: &str, fact: Fact) {
        self.facts.insert(query.trim().to_string(), fact);
    }

    pub fn lookup(&self, query: &str) -> Option<&Fact> {
        self.facts.get(query.trim())
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    fn fact_for(&self, query: &str) -> Fact {
        if let Some(f) = self.lookup(query) {
            return f.clone();
        }
        let h = xxh3_64_with_seed(query.trim().as_bytes(), 0x5eed);
        let id = format!("q:{h:016x}");
        match self.kind {
            TaskKind::MultipleChoice => {
                let pick = (h % self.options as u64) as usize;
                let norm = &OPTION_LETTERS[pick..pick + 1];
                Fact {
                    id,
                    answer: display_answer(norm, self.kind),
                    distractors: option_distractors(norm, self.options),
                }
            }
            _ => Fact { id, answer: "unknown".into(), distractors: vec!["not known".into()] },
        }
    }
}

fn option_distractors(norm: &str, options: usize) -> Vec<String> {
    OPTION_LETTERS[..options]
        .chars()
        .filter(|c| !norm.starts_with(*c))
        .map(|c| c.to_ascii_uppercase().to_string())
        .collect()
}

fn pool_distractors(id: &str, answer: &str, pool: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    if pool.len() > 1 {
        let start = xxh3_64_with_seed(id.as_bytes(), 0xd15) as usize % pool.len();
        for offset in 0..pool.len() {
            let candidate = &pool[(start + offset) % pool.len()];
            if candidate != answer && !out.contains(candidate) {
                out.push(candidate.clone());
                if out.len() == 3 {
                    break;
                }
            }
        }
    }
    if out.is_empty() {
        out.push(format!("not {answer}"));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Decision {
    Correct(String),
    Wrong(String),
    Garbled,
}

impl Decision {
    fn is_correct(&self) -> bool {
        matches!(self, Decision::Correct(_))
    }
}

pub struct SimulatedBackend {
    settings: SimSettings,
    knowledge: Knowledge,
}

impl SimulatedBackend {
    pub fn new(settings: SimSettings, knowledge: Knowledge) -> Self {
        SimulatedBackend { settings, knowledge }
    }

    pub fn settings(&self) -> &SimSettings {
        &self.settings
    }

    fn hash(&self, id: &str, salt: &str) -> u64 {
        let mut key = Vec::with_capacity(id.len() + salt.len() + 1);
        key.extend_from_slice(id.as_bytes());
        key.push(0x1f);
        key.extend_from_slice(salt.as_bytes());
        xxh3_64_with_seed(&key, self.settings.seed)
    }

    fn unit(&self, id: &str, salt: &str) -> f64 {
        (self.hash(id, salt) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn decide(&self, fact: &Fact, role: &str) -> Decision {
        if self.unit(fact.id.as_str(), &format!("{role}/garble")) < self.settings.unparseable_rate {
            return Decision::Garbled;
        }
        if self.unit(&fact.id, role) < self.settings.oracle_accuracy {
            Decision::Correct(fact.answer.clone())
        } else {
            let pick = self.hash(&fact.id, &format!("{role}/distractor")) as usize
                % fact.distractors.len();
            Decision::Wrong(fact.distractors[pick].clone())
        }
    }

    fn render_answer(&self, expert: Expert, decision: &Decision, revised: bool) -> String {
        let answer = match decision {
            Decision::Correct(a) | Decision::Wrong(a) => a,
            Decision::Garbled => return "...".into(),
        };
        let mc = self.knowledge.kind == TaskKind::MultipleChoice;
        match (expert, mc) {
            (Expert::Reasoning, true) => {
                let preface = if revised { "Taking the earlier reflection into account, " } else { "" };
                format!(
                    "Let me work through this step by step. {preface}Checking each option against \
                     the question, ({answer}) is the only one consistent with it. The answer is ({answer})."
                )
            }
            (Expert::Reasoning, false) => format!(
                "Let me work through this step by step. The key facts point to one result.\nAnswer: {answer}"
            ),
            (Expert::Review, true) => {
                format!("After weighing both candidates, the final answer is ({answer}).")
            }
            (Expert::Review, false) => format!("After weighing both candidates.\nAnswer: {answer}"),
            (_, true) => format!("The answer is ({answer})."),
            (_, false) => format!("Answer: {answer}"),
        }
    }

    fn logprobs_for(&self, fact: &Fact, role: &str, text: &str, correct: bool) -> Vec<TokenLogprob> {
        let scale =
            if correct { self.settings.confident_scale } else { self.settings.uncertain_scale };
        text.split_whitespace()
            .enumerate()
            .map(|(j, token)| TokenLogprob {
                token: token.to_string(),
                logprob: -(scale * self.unit(&fact.id, &format!("{role}/lp/{j}"))),
            })
            .collect()
    }

    fn respond(&self, req: &CompletionRequest) -> Result<(String, Option<Vec<TokenLogprob>>), BackendError> {
        let question = last_tag_block(&req.user_prompt, "question").ok_or_else(|| {
            BackendError::Permanent {
                status: 400,
                message: "simulated backend: prompt has no <question> block".into(),
            }
        })?;
        let fact = self.knowledge.fact_for(question);
        let role = req.expert.as_str();

        match req.expert {
            Expert::Reflection => {
                let tag = self.hash(&fact.id, &req.user_prompt) & 0xffff_ffff;
                let text = format!(
                    "Reflection {tag:08x}: each step of the reasoning was re-checked; the \
                     elimination of alternatives holds and no step contradicts the question."
                );
                return Ok((text, None));
            }
            Expert::Confidence => {
                let decision = self.decide(&fact, Expert::Context.as_str());
                let text = self.render_answer(Expert::Context, &decision, false);
                let lps = self.logprobs_for(&fact, Expert::Context.as_str(), &text, decision.is_correct());
                let mean = lps.iter().map(|t| -t.logprob).sum::<f64>() / lps.len().max(1) as f64;
                let pct = (100.0 * (-mean).exp()).round().clamp(1.0, 100.0) as u32;
                return Ok((format!("Confidence: {pct}"), None));
            }
            Expert::Review if self.settings.reviewer == ReviewerMode::EchoFirst => {
                let first = candidate_block(&req.user_prompt, 1).unwrap_or("").trim().to_string();
                let decision = if first.is_empty() { Decision::Garbled } else { Decision::Wrong(first) };
                return Ok((self.render_answer(Expert::Review, &decision, false), None));
            }
            _ => {}
        }

        let decision = self.decide(&fact, role);
        let revised = req.user_prompt.contains("<reflection>");
        let text = self.render_answer(req.expert, &decision, revised);
        let logprobs = (req.want_logprobs && self.settings.logprobs)
            .then(|| self.logprobs_for(&fact, role, &text, decision.is_correct()));
        Ok((text, logprobs))
    }
}

impl Backend for SimulatedBackend {
    fn model_id(&self, _expert: Expert) -> String {
        let s = &self.settings;
        format!(
            "simulated(seed={},acc={},lp={},reviewer={:?},scales={}/{},garble={})",
            s.seed, s.oracle_accuracy, s.logprobs, s.reviewer, s.confident_scale,
            s.uncertain_scale, s.unparseable_rate
        )
    }

    fn embedding_model_id(&self) -> String {
        format!("simulated-trigram-hash(dim={},seed={})", self.settings.embedding_dim, self.settings.seed)
    }

    fn supports_logprobs(&self) -> bool {
        self.settings.logprobs
    }

    fn complete(&self, req: &CompletionRequest) -> Result<Prediction, BackendError> {
        let (text, token_logprobs) = self.respond(req)?;
        Ok(Prediction {
            text,
            token_logprobs,
            expert: req.expert,
            request_fingerprint: request_fingerprint(req, &self.model_id(req.expert)),
        })
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::Precondition("cannot embed empty text".into()));
        }
        let dim = self.settings.embedding_dim;
        let padded: Vec<char> = format!("  {} ", text.trim().to_lowercase()).chars().collect();
        let mut values = vec![0.0f64; dim];
        let mut first_bucket = None;
        let mut buf = [0u8; 12];
        for gram in padded.windows(3) {
            let mut len = 0;
            for c in gram {
                len += c.encode_utf8(&mut buf[len..]).len();
            }
            let h = xxh3_64_with_seed(&buf[..len], self.settings.seed ^ 0xe3be_dd1a);
            let bucket = (h % dim as u64) as usize;
            first_bucket.get_or_insert(bucket);
            values[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        if values.iter().all(|v| *v == 0.0) {
            values[first_bucket.unwrap_or(0)] = 1.0;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        values.iter_mut().for_each(|v| *v /= norm);
        EmbeddingVector::new(values).map_err(|e| BackendError::Precondition(e.to_string()))
    }
}
