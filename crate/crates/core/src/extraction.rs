//! Pulling tagged programs out of completion text and classifying each
//! completion as no-code, syntax error, runtime error, or executed.

use serde::{Deserialize, Serialize};

use crate::engine::{evaluate_traced, Environment, EvalError, Limits, Value};
use crate::lang::{parse_program, SourceSpan};

pub const OPEN_TAG: &str = "<neurosymtag>";
pub const CLOSE_TAG: &str = "</neurosymtag>";

/// One model output for one prompt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub id: String,
    pub prompt_id: String,
    pub completion_text: String,
    #[serde(default)]
    pub prompt_token_len: u64,
    #[serde(default)]
    pub output_token_len: u64,
}

impl CompletionRecord {
    pub fn new(id: impl Into<String>, prompt_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            prompt_id: prompt_id.into(),
            completion_text: text.into(),
            prompt_token_len: 0,
            output_token_len: 0,
        }
    }
}

/// Contents of every `<neurosymtag>...</neurosymtag>` pair, trimmed, in order.
/// An opening tag without a closing tag yields the rest of the text.
pub fn extract_tagged_code(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find(OPEN_TAG) {
        let body = &rest[open + OPEN_TAG.len()..];
        match body.find(CLOSE_TAG) {
            Some(close) => {
                blocks.push(body[..close].trim().to_string());
                rest = &body[close + CLOSE_TAG.len()..];
            }
            None => {
                blocks.push(body.trim().to_string());
                break;
            }
        }
    }
    blocks
}

/// Which block is executed when a completion contains several.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockPolicy {
    First,
    #[default]
    Last,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NoCode,
    SyntaxError,
    RuntimeError,
    Executed,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::NoCode => "no_code",
            Classification::SyntaxError => "syntax_error",
            Classification::RuntimeError => "runtime_error",
            Classification::Executed => "executed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OutcomeKind {
    NoCode,
    SyntaxError { message: String, span: SourceSpan },
    RuntimeError(EvalError),
    Executed(Value),
}

/// Classification of one completion. The source is present exactly when the
/// kind is not `NoCode`.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    kind: OutcomeKind,
    source: Option<String>,
    eval_steps: u64,
}

impl Outcome {
    pub fn no_code() -> Self {
        Self { kind: OutcomeKind::NoCode, source: None, eval_steps: 0 }
    }

    pub fn kind(&self) -> &OutcomeKind {
        &self.kind
    }

    pub fn extracted_source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn eval_steps(&self) -> u64 {
        self.eval_steps
    }

    pub fn classification(&self) -> Classification {
        match self.kind {
            OutcomeKind::NoCode => Classification::NoCode,
            OutcomeKind::SyntaxError { .. } => Classification::SyntaxError,
            OutcomeKind::RuntimeError(_) => Classification::RuntimeError,
            OutcomeKind::Executed(_) => Classification::Executed,
        }
    }

    pub fn has_code(&self) -> bool {
        !matches!(self.kind, OutcomeKind::NoCode)
    }

    pub fn error_free(&self) -> bool {
        matches!(self.kind, OutcomeKind::Executed(_))
    }

    pub fn answer(&self) -> Option<&Value> {
        match &self.kind {
            OutcomeKind::Executed(v) => Some(v),
            _ => None,
        }
    }

    pub fn error_message(&self) -> Option<String> {
        match &self.kind {
            OutcomeKind::SyntaxError { message, span } => Some(format!("{}:{}: {message}", span.line, span.column)),
            OutcomeKind::RuntimeError(e) => Some(e.to_string()),
            _ => None,
        }
    }
}

/// Parses and runs one extracted program in a fresh environment.
pub fn run_source(source: &str, limits: &Limits) -> Outcome {
    let (kind, eval_steps) = match parse_program(source) {
        Err(e) => (OutcomeKind::SyntaxError { message: e.to_string(), span: e.span() }, 0),
        Ok(program) => {
            let (result, stats) = evaluate_traced(&program, &mut Environment::new(), limits);
            let kind = match result {
                Ok(v) => OutcomeKind::Executed(v),
                Err(e) => OutcomeKind::RuntimeError(e),
            };
            (kind, stats.steps)
        }
    };
    Outcome { kind, source: Some(source.to_string()), eval_steps }
}

pub fn classify_text(text: &str, limits: &Limits, policy: BlockPolicy) -> Outcome {
    let blocks = extract_tagged_code(text);
    let chosen = match policy {
        BlockPolicy::First => blocks.first(),
        BlockPolicy::Last => blocks.last(),
    };
    match chosen {
        None => Outcome::no_code(),
        Some(source) => run_source(source, limits),
    }
}

pub fn classify_completion(record: &CompletionRecord, limits: &Limits) -> Outcome {
    classify_text(&record.completion_text, limits, BlockPolicy::Last)
}
