//! A finite-domain guarded-event modelling language and its compiler to
//! typed LKS.
//!
//! A model declares sorts, state variables, an initial constraint and
//! parametrised event schemas. Compilation grounds every schema over its
//! parameter sorts and enumerates the reachable valuations breadth-first.

mod assert;
mod compile;
pub mod eval;
pub mod model;
pub mod syntax;

use thiserror::Error;

use crate::seltl::{BindError, ParseError};

pub use compile::{compile_lks, ground, CellValue, CompileOptions, CompiledModel, GroundEvent};
pub use model::EventSystem;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EgsError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: {message}")]
    Type {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: `{var}` is assigned by `{event}` but is not in its modifies set")]
    FrameViolation {
        line: usize,
        column: usize,
        var: String,
        event: String,
    },
    #[error("a model must declare at least one variable and one event")]
    Empty,
    #[error("no valuation satisfies the init constraint")]
    EmptyInitial,
    #[error("deadlocked states: {}", .0.join(", "))]
    Deadlock(Vec<String>),
    #[error("more than {0} reachable states")]
    StateLimit(usize),
    #[error("unknown assertion `{0}`")]
    UnknownAssertion(String),
}

/// A property that names no assertion and does not parse or bind.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PropertyError {
    #[error("property {0}")]
    Parse(#[from] ParseError),
    #[error("property: {0}")]
    Bind(#[from] BindError),
}

impl PropertyError {
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            PropertyError::Parse(e) => Some((e.line, e.column)),
            PropertyError::Bind(_) => None,
        }
    }
}

impl EgsError {
    pub(crate) fn syntax(span: syntax::Span, message: impl Into<String>) -> Self {
        EgsError::Syntax {
            line: span.line,
            column: span.column,
            message: message.into(),
        }
    }

    /// Source position as `(line, column)`, when the error has one.
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            EgsError::Syntax { line, column, .. }
            | EgsError::Type { line, column, .. }
            | EgsError::FrameViolation { line, column, .. } => Some((*line, *column)),
            _ => None,
        }
    }
}

/// Parses and type-checks model source.
pub fn parse_model(src: &str) -> Result<EventSystem, EgsError> {
    model::check(&syntax::parse(src)?)
}
