//! Consistency checker over {label, base prediction, reasoning prediction}.

use serde::{Deserialize, Serialize};

use crate::answer::{normalize_answer, TaskKind};
use crate::prediction::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckerPolicy {
    /// Reliable when the label matches at least one expert.
    #[default]
    AnyMatch,
    /// Reliable only when the label matches both experts.
    BothMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Noisy,
    Clean,
}

impl Verdict {
    pub fn bit(self) -> u8 {
        match self {
            Verdict::Noisy => 0,
            Verdict::Clean => 1,
        }
    }
}

/// Which experts agree with the provided label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgreementPattern {
    pub base_matches: bool,
    pub reasoning_matches: bool,
}

impl AgreementPattern {
    pub fn observe(label: &str, base: &str, reasoning: &str, kind: TaskKind) -> Self {
        let label = normalize_answer(label, kind);
        let agrees = |text: &str| {
            let answer = normalize_answer(text, kind);
            !label.is_empty() && !answer.is_empty() && answer == label
        };
        AgreementPattern { base_matches: agrees(base), reasoning_matches: agrees(reasoning) }
    }

    pub fn name(self) -> &'static str {
        match (self.base_matches, self.reasoning_matches) {
            (true, true) => "both",
            (true, false) => "base-only",
            (false, true) => "reasoning-only",
            (false, false) => "neither",
        }
    }
}

impl CheckerPolicy {
    pub fn verdict(self, pattern: AgreementPattern) -> Verdict {
        let reliable = match self {
            CheckerPolicy::AnyMatch => pattern.base_matches || pattern.reasoning_matches,
            CheckerPolicy::BothMatch => pattern.base_matches && pattern.reasoning_matches,
        };
        if reliable {
            Verdict::Clean
        } else {
            Verdict::Noisy
        }
    }
}

pub fn check_consistency(
    label: &str,
    base: &Prediction,
    reasoning: &Prediction,
    kind: TaskKind,
    policy: CheckerPolicy,
) -> Verdict {
    policy.verdict(AgreementPattern::observe(label, &base.text, &reasoning.text, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prediction::Expert;
    use alloc::string::String;

    fn pred(text: &str) -> Prediction {
        Prediction {
            text: String::from(text),
            token_logprobs: None,
            expert: Expert::Base,
            request_fingerprint: String::new(),
        }
    }

    fn check(label: &str, base: &str, reas: &str, policy: CheckerPolicy) -> u8 {
        check_consistency(label, &pred(base), &pred(reas), TaskKind::MultipleChoice, policy).bit()
    }

    #[test]
    fn examples() {
        assert_eq!(check("B", "b", "b", CheckerPolicy::AnyMatch), 1);
        assert_eq!(check("B", "c", "d", CheckerPolicy::AnyMatch), 0);
        assert_eq!(check("B", "c", "b", CheckerPolicy::AnyMatch), 1);
        assert_eq!(check("B", "c", "b", CheckerPolicy::BothMatch), 0);
    }

    #[test]
    fn unparseable_never_matches() {
        assert_eq!(check("B", "no idea", "no idea", CheckerPolicy::AnyMatch), 0);
        // An unparseable label never matches an unparseable prediction either.
        assert_eq!(check("maybe", "perhaps", "perhaps", CheckerPolicy::AnyMatch), 0);
    }
}
