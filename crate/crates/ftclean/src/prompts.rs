//! Prompt templates.
//!
//! Templates use `{slot}` placeholders filled in one pass, so slot values are
//! never re-expanded. The defaults wrap the target query in a
//! `<question>` block, exemplars in `<example>` blocks and review candidates
//! in `<candidate id="N">` blocks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const PROMPT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    System,
    Task,
    Reasoning,
    ReasoningRevise,
    Reflection,
    Context,
    Exemplar,
    Review,
    Confidence,
}

impl TemplateName {
    pub const ALL: [TemplateName; 9] = [
        TemplateName::System,
        TemplateName::Task,
        TemplateName::Reasoning,
        TemplateName::ReasoningRevise,
        TemplateName::Reflection,
        TemplateName::Context,
        TemplateName::Exemplar,
        TemplateName::Review,
        TemplateName::Confidence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::System => "system",
            TemplateName::Task => "task",
            TemplateName::Reasoning => "reasoning",
            TemplateName::ReasoningRevise => "reasoning_revise",
            TemplateName::Reflection => "reflection",
            TemplateName::Context => "context",
            TemplateName::Exemplar => "exemplar",
            TemplateName::Review => "review",
            TemplateName::Confidence => "confidence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Slots every template of this name must use, and the only ones it may use.
    pub fn slots(self) -> &'static [&'static str] {
        match self {
            TemplateName::System => &[],
            TemplateName::Task => &["question"],
            TemplateName::Reasoning => &["question"],
            TemplateName::ReasoningRevise => &["question", "reasoning", "reflection"],
            TemplateName::Reflection => &["question", "reasoning"],
            TemplateName::Context | TemplateName::Confidence => &["exemplars", "question"],
            TemplateName::Exemplar => &["query", "label"],
            TemplateName::Review => &["question", "candidates"],
        }
    }

    fn default_text(self) -> &'static str {
        match self {
            TemplateName::System => "You are a careful expert. Answer accurately and concisely.",
            TemplateName::Task => {
                "Answer the question. End with \"The answer is X.\"\n\n<question>\n{question}\n</question>\n"
            }
            TemplateName::Reasoning => {
                "Think step by step, then end with \"The answer is X.\"\n\n<question>\n{question}\n</question>\n"
            }
            TemplateName::ReasoningRevise => {
                "Think step by step, taking the critique of your earlier reasoning into account, then end with \"The answer is X.\"\n\n\
                 <reasoning>\n{reasoning}\n</reasoning>\n\n<reflection>\n{reflection}\n</reflection>\n\n<question>\n{question}\n</question>\n"
            }
            TemplateName::Reflection => {
                "Critique the reasoning below. Point out any flawed step or overlooked alternative. Do not give a final answer.\n\n\
                 <reasoning>\n{reasoning}\n</reasoning>\n\n<question>\n{question}\n</question>\n"
            }
            TemplateName::Context => {
                "Here are solved examples similar to the question.\n\n{exemplars}\
                 Answer the question in the same way. End with \"The answer is X.\"\n\n<question>\n{question}\n</question>\n"
            }
            TemplateName::Exemplar => "<example>\n<query>\n{query}\n</query>\n<label>{label}</label>\n</example>\n\n",
            TemplateName::Review => {
                "Two experts proposed answers to the question. Evaluate them and give the single correct final answer. \
                 End with \"The answer is X.\"\n\n<question>\n{question}\n</question>\n\n{candidates}"
            }
            TemplateName::Confidence => {
                "Here are solved examples similar to the question.\n\n{exemplars}\
                 Answer the question, then state how confident you are as \"Confidence: N\" with N from 0 to 100.\n\n\
                 <question>\n{question}\n</question>\n"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` is missing slot {{{slot}}}")]
    MissingSlot { template: &'static str, slot: &'static str },
    #[error("template `{template}` uses unknown slot {{{slot}}}")]
    UnknownSlot { template: &'static str, slot: String },
    #[error("template `{template}` has an unclosed `{{`")]
    Unclosed { template: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Slot(String),
}

fn parse_template(name: TemplateName, text: &str) -> Result<Vec<Piece>, TemplateError> {
    let mut pieces = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let Some(len) = rest[open + 1..].find('}') else {
            return Err(TemplateError::Unclosed { template: name.as_str() });
        };
        let slot = &rest[open + 1..open + 1 + len];
        if !name.slots().contains(&slot) {
            return Err(TemplateError::UnknownSlot { template: name.as_str(), slot: slot.into() });
        }
        if open > 0 {
            pieces.push(Piece::Text(rest[..open].into()));
        }
        pieces.push(Piece::Slot(slot.into()));
        rest = &rest[open + 2 + len..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest.into()));
    }
    for slot in name.slots() {
        if !pieces.iter().any(|p| matches!(p, Piece::Slot(s) if s == slot)) {
            return Err(TemplateError::MissingSlot { template: name.as_str(), slot });
        }
    }
    Ok(pieces)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    templates: BTreeMap<TemplateName, Vec<Piece>>,
}

impl Default for PromptSet {
    fn default() -> Self {
        let templates = TemplateName::ALL
            .into_iter()
            .map(|n| (n, parse_template(n, n.default_text()).expect("default template is valid")))
            .collect();
        PromptSet { templates }
    }
}

impl PromptSet {
    /// Defaults with the given templates replaced.
    pub fn with_overrides<'a>(
        overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, TemplateError> {
        let mut set = PromptSet::default();
        for (name, text) in overrides {
            let n = TemplateName::parse(name)
                .ok_or_else(|| TemplateError::UnknownTemplate(name.into()))?;
            set.templates.insert(n, parse_template(n, text)?);
        }
        Ok(set)
    }

    pub fn render(&self, name: TemplateName, values: &[(&str, &str)]) -> String {
        let mut out = String::new();
        for piece in &self.templates[&name] {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(s) => {
                    let v = values.iter().find(|(k, _)| k == s).map(|(_, v)| *v);
                    out.push_str(v.unwrap_or_else(|| panic!("no value for slot {s}")));
                }
            }
        }
        out
    }

    pub fn system(&self) -> String {
        self.render(TemplateName::System, &[])
    }

    pub fn task(&self, question: &str) -> String {
        self.render(TemplateName::Task, &[("question", question)])
    }

    pub fn reasoning(&self, question: &str, previous: Option<(&str, &str)>) -> String {
        match previous {
            None => self.render(TemplateName::Reasoning, &[("question", question)]),
            Some((reasoning, reflection)) => self.render(
                TemplateName::ReasoningRevise,
                &[("question", question), ("reasoning", reasoning), ("reflection", reflection)],
            ),
        }
    }

    pub fn reflection(&self, question: &str, reasoning: &str) -> String {
        self.render(TemplateName::Reflection, &[("question", question), ("reasoning", reasoning)])
    }

    fn exemplars(&self, exemplars: &[(&str, &str)]) -> String {
        exemplars
            .iter()
            .map(|(q, l)| self.render(TemplateName::Exemplar, &[("query", q), ("label", l)]))
            .collect()
    }

    pub fn context(&self, question: &str, exemplars: &[(&str, &str)]) -> String {
        let ex = self.exemplars(exemplars);
        self.render(TemplateName::Context, &[("exemplars", &ex), ("question", question)])
    }

    pub fn confidence(&self, question: &str, exemplars: &[(&str, &str)]) -> String {
        let ex = self.exemplars(exemplars);
        self.render(TemplateName::Confidence, &[("exemplars", &ex), ("question", question)])
    }

    pub fn review(&self, question: &str, candidates: &[&str]) -> String {
        let blocks: String = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| format!("<candidate id=\"{}\">\n{c}\n</candidate>\n", i + 1))
            .collect();
        self.render(TemplateName::Review, &[("question", question), ("candidates", &blocks)])
    }
}

fn block_body<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.rfind(open)? + open.len();
    let len = text[start..].find(close)?;
    Some(text[start..start + len].trim_matches('\n'))
}

/// Body of the last `<tag>…</tag>` block.
pub fn last_tag_block<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    block_body(text, &format!("<{tag}>"), &format!("</{tag}>"))
}

/// Body of `<candidate id="n">…</candidate>`.
pub fn candidate_block(text: &str, n: usize) -> Option<&str> {
    block_body(text, &format!("<candidate id=\"{n}\">"), "</candidate>")
}
