//! Decision table for combining the context-enhanced and reasoning-enhanced
//! candidates into one relabel.
//!
//! | context     | reasoning   | outcome                                  |
//! |-------------|-------------|------------------------------------------|
//! | x           | x           | `Agreed(x)`, no review call               |
//! | x           | y ≠ x       | review call; unparseable review → x       |
//! | x           | unparseable | `Single(x)`                               |
//! | unparseable | y           | `Single(y)`                               |
//! | unparseable | unparseable | `Unresolvable`                            |

use alloc::string::String;
use serde::{Deserialize, Serialize};

use crate::prediction::Expert;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReviewPlan {
    Agreed(String),
    Single { answer: String, from: Expert },
    Contested { context: String, reasoning: String },
    Unresolvable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewOutcome {
    /// Both candidates agreed; no review call was made.
    Agreed,
    /// Only one candidate was parseable and was taken as-is.
    SingleCandidate,
    /// The review call produced a parseable answer.
    Reviewed,
    /// The review output was unparseable; the context answer was used.
    Fallback,
    Unresolvable,
}

impl ReviewOutcome {
    pub fn is_resolved(self) -> bool {
        !matches!(self, ReviewOutcome::Unresolvable)
    }
}

/// Plan from normalized candidates (empty = unparseable).
pub fn plan_review(context: &str, reasoning: &str) -> ReviewPlan {
    match (context.is_empty(), reasoning.is_empty()) {
        (true, true) => ReviewPlan::Unresolvable,
        (false, true) => ReviewPlan::Single { answer: String::from(context), from: Expert::Context },
        (true, false) => {
            ReviewPlan::Single { answer: String::from(reasoning), from: Expert::Reasoning }
        }
        (false, false) if context == reasoning => ReviewPlan::Agreed(String::from(context)),
        (false, false) => ReviewPlan::Contested {
            context: String::from(context),
            reasoning: String::from(reasoning),
        },
    }
}

/// Final answer for a contested pair given the normalized review output.
pub fn resolve_contested(context: &str, reviewed: &str) -> (String, ReviewOutcome) {
    if reviewed.is_empty() {
        (String::from(context), ReviewOutcome::Fallback)
    } else {
        (String::from(reviewed), ReviewOutcome::Reviewed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table() {
        assert_eq!(plan_review("b", "b"), ReviewPlan::Agreed("b".into()));
        assert_eq!(
            plan_review("b", "c"),
            ReviewPlan::Contested { context: "b".into(), reasoning: "c".into() }
        );
        assert_eq!(
            plan_review("", "c"),
            ReviewPlan::Single { answer: "c".into(), from: Expert::Reasoning }
        );
        assert_eq!(
            plan_review("b", ""),
            ReviewPlan::Single { answer: "b".into(), from: Expert::Context }
        );
        assert_eq!(plan_review("", ""), ReviewPlan::Unresolvable);
    }

    #[test]
    fn contested_resolution_prefers_context_on_failure() {
        assert_eq!(resolve_contested("b", ""), ("b".into(), ReviewOutcome::Fallback));
        assert_eq!(resolve_contested("b", "c"), ("c".into(), ReviewOutcome::Reviewed));
    }
}
