//! Canonical answer forms used by every agreement comparison.
//!
//! `normalize_answer` is the single definition of "two answers agree": two
//! texts agree iff their normalized forms are equal and non-empty. An empty
//! normalized form means the text could not be parsed into an answer.

use alloc::string::String;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    MultipleChoice,
    ShortAnswer,
    FreeText,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::MultipleChoice => "multiple-choice",
            TaskKind::ShortAnswer => "short-answer",
            TaskKind::FreeText => "free-text",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "multiple-choice" => Some(TaskKind::MultipleChoice),
            "short-answer" => Some(TaskKind::ShortAnswer),
            "free-text" => Some(TaskKind::FreeText),
            _ => None,
        }
    }
}

/// Option identifiers recognised for multiple-choice answers.
pub const OPTION_LETTERS: &str = "abcdefgh";

const ANSWER_CUES: [&str; 2] = ["answer is ", "answer:"];

pub fn normalize_answer(raw: &str, kind: TaskKind) -> String {
    match kind {
        TaskKind::MultipleChoice => extract_option(raw).map(String::from).unwrap_or_default(),
        TaskKind::ShortAnswer => {
            let folded = fold(raw);
            let tail = match last_cue_end(&folded) {
                Some(end) => &folded[end..],
                None => folded.as_str(),
            };
            String::from(tail.trim_matches(|c: char| !c.is_alphanumeric()))
        }
        TaskKind::FreeText => fold(raw),
    }
}

/// Presentation form of a normalized answer. Multiple-choice letters are
/// shown in upper case; other kinds are returned unchanged.
pub fn display_answer(normalized: &str, kind: TaskKind) -> String {
    match kind {
        TaskKind::MultipleChoice => normalized.to_uppercase(),
        _ => String::from(normalized),
    }
}

/// Index of the option letter (`a` = 0) of a normalized multiple-choice
/// answer, if it is one.
pub fn option_index(normalized: &str) -> Option<usize> {
    let mut chars = normalized.chars();
    let c = chars.next()?;
    if chars.next().is_some() {
        return None;
    }
    OPTION_LETTERS.find(c)
}

/// Trim, case-fold and collapse internal whitespace runs to one space.
///
/// Characters whose lower-case form is longer in UTF-8 than the original are
/// kept as-is so the result never grows.
fn fold(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) if l.len_utf8() <= c.len_utf8() => out.push(l),
                _ => out.push(c),
            }
        }
    }
    out
}

fn last_cue_end(folded: &str) -> Option<usize> {
    ANSWER_CUES
        .iter()
        .filter_map(|cue| folded.rfind(cue).map(|at| at + cue.len()))
        .max()
}

struct OptionToken {
    letter: char,
    upper: bool,
    bracketed: bool,
}

fn option_token(token: &str) -> Option<OptionToken> {
    let opened = token.starts_with(['(', '[']);
    let inner = token.trim_start_matches(['(', '[']);
    let mut chars = inner.chars();
    let letter = chars.next()?;
    let rest = chars.as_str();
    if !letter.is_ascii_alphabetic() {
        return None;
    }
    let lower = letter.to_ascii_lowercase();
    if !OPTION_LETTERS.contains(lower) {
        return None;
    }
    if !rest.chars().all(|c| matches!(c, ')' | ']' | '.' | ',' | ':' | ';' | '!' | '?')) {
        return None;
    }
    let closed = rest.starts_with([')', ']']);
    Some(OptionToken {
        letter: lower,
        upper: letter.is_ascii_uppercase(),
        bracketed: opened || closed,
    })
}

/// First option identifier in `raw`.
///
/// An identifier directly introduced by an answer cue ("answer is", "answer:")
/// wins; otherwise the first standalone letter that is upper-case or
/// bracketed. A text consisting of a single bare letter is that letter.
fn extract_option(raw: &str) -> Option<char> {
    let lowered = raw.to_ascii_lowercase();
    let mut cue_starts: alloc::vec::Vec<usize> = ANSWER_CUES
        .iter()
        .flat_map(|cue| lowered.match_indices(cue).map(move |(at, _)| at + cue.len()))
        .collect();
    cue_starts.sort_unstable();
    for start in cue_starts {
        // The cue matched on the ASCII-lowered copy, which has identical byte offsets.
        if let Some(tok) = raw[start..].split_whitespace().find_map(option_token) {
            return Some(tok.letter);
        }
    }

    let mut tokens = raw.split_whitespace();
    let first = tokens.next()?;
    let sole = tokens.next().is_none();
    raw.split_whitespace()
        .filter_map(option_token)
        .find(|t| t.upper || t.bracketed || sole)
        .map(|t| t.letter)
        .or_else(|| if sole { option_token(first).map(|t| t.letter) } else { None })
}
