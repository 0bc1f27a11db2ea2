//! Core algorithms for curating noisy supervised fine-tuning data.
//!
//! Everything in this crate is a pure function of its inputs and only needs
//! an allocator: answer normalization, the consistency checker, the review
//! decision table, exact kNN over embeddings, entropy scoring and top-β
//! selection, seeded noise injection and the evaluation metrics. Model
//! calls, file formats and orchestration live in the `ftclean` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod answer;
pub mod checker;
pub mod error;
pub mod metrics;
pub mod noise;
pub mod prediction;
pub mod retrieve;
pub mod review;
pub mod sample;
pub mod select;

pub use answer::{display_answer, normalize_answer, TaskKind};
pub use checker::{check_consistency, AgreementPattern, CheckerPolicy, Verdict};
pub use error::{Error, Result};
pub use metrics::{detection_metrics, label_accuracy, residual_noise_rate, DetectionMetrics};
pub use noise::{inject_noise, option_count, synthetic_corpus, NoiseModel, NoiseSpec};
pub use prediction::{Expert, Prediction, TokenLogprob};
pub use retrieve::{cosine_similarity, EmbeddingIndex, EmbeddingVector, Neighbor};
pub use review::{plan_review, resolve_contested, ReviewOutcome, ReviewPlan};
pub use sample::{Dataset, Sample, Tag};
pub use select::{assemble_ft, entropy_score, select, selection_count, ScoredSample, Selection};
