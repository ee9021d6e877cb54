use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Steps,
    Depth,
    ListLength,
    WallClock,
    /// Exact number too wide; see [`super::number::MAX_EXACT_BITS`].
    IntegerSize,
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitKind::Steps => "steps",
            LimitKind::Depth => "depth",
            LimitKind::ListLength => "list length",
            LimitKind::WallClock => "wall clock",
            LimitKind::IntegerSize => "integer size",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalErrorKind {
    DivisionByZero,
    BadArgCount,
    BadArgType,
    NonGroundResult,
    LimitExceeded(LimitKind),
    UnknownOperation,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalErrorKind::DivisionByZero => f.write_str("division by zero"),
            EvalErrorKind::BadArgCount => f.write_str("bad argument count"),
            EvalErrorKind::BadArgType => f.write_str("bad argument type"),
            EvalErrorKind::NonGroundResult => f.write_str("non-ground result"),
            EvalErrorKind::LimitExceeded(which) => write!(f, "{which} limit exceeded"),
            EvalErrorKind::UnknownOperation => f.write_str("unknown operation"),
        }
    }
}

/// Runtime failure of an evaluation. `head` names the builtin or symbol
/// being applied when the failure happened, if any.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub head: Option<String>,
    pub message: String,
}

impl EvalError {
    pub fn new(kind: EvalErrorKind, message: impl Into<String>) -> Self {
        Self { kind, head: None, message: message.into() }
    }

    /// Attaches a location unless one is already set.
    pub fn at(mut self, head: &str) -> Self {
        if self.head.is_none() {
            self.head = Some(head.to_string());
        }
        self
    }

    pub(crate) fn limit(which: LimitKind, message: impl Into<String>) -> Self {
        Self::new(EvalErrorKind::LimitExceeded(which), message)
    }

    pub(crate) fn arg_count(head: &str, message: impl Into<String>) -> Self {
        Self::new(EvalErrorKind::BadArgCount, message).at(head)
    }

    pub(crate) fn arg_type(head: &str, message: impl Into<String>) -> Self {
        Self::new(EvalErrorKind::BadArgType, message).at(head)
    }

    pub(crate) fn unknown(head: &str, message: impl Into<String>) -> Self {
        Self::new(EvalErrorKind::UnknownOperation, message).at(head)
    }
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.head {
            Some(head) => write!(f, "{} in {}: {}", self.kind, head, self.message),
            None => write!(f, "{}: {}", self.kind, self.message),
        }
    }
}
