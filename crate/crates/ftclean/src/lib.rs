//! Noisy-label curation for supervised fine-tuning data.
//!
//! The pipeline flags samples whose label disagrees with independent model
//! predictions, relabels them with retrieval-augmented context and a review
//! step, and keeps the most confident relabels.

pub mod backend;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod denoise;
pub mod detect;
pub mod error;
pub mod harness;
pub mod pipeline;
pub mod prompts;
pub mod report;
pub mod retrieve;
pub mod stage;
pub mod workers;
