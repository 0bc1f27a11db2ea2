use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::answer::{normalize_answer, TaskKind};

/// Role a model plays when producing a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expert {
    Base,
    Reasoning,
    Reflection,
    Context,
    Checker,
    Review,
    /// Verbal confidence query used when an endpoint returns no logprobs.
    Confidence,
}

impl Expert {
    pub const ALL: [Expert; 7] = [
        Expert::Base,
        Expert::Reasoning,
        Expert::Reflection,
        Expert::Context,
        Expert::Checker,
        Expert::Review,
        Expert::Confidence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Expert::Base => "base",
            Expert::Reasoning => "reasoning",
            Expert::Reflection => "reflection",
            Expert::Context => "context",
            Expert::Checker => "checker",
            Expert::Review => "review",
            Expert::Confidence => "confidence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub token: String,
    pub logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<TokenLogprob>>,
    pub expert: Expert,
    pub request_fingerprint: String,
}

impl Prediction {
    pub fn answer(&self, kind: TaskKind) -> String {
        normalize_answer(&self.text, kind)
    }

    pub fn is_parseable(&self, kind: TaskKind) -> bool {
        !self.answer(kind).is_empty()
    }
}
