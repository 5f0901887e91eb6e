use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::ExtQ;

/// Syntax error with a 1-based position and the tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn msg(message: impl Into<String>) -> ParseError {
        ParseError { line: 0, column: 0, message: message.into(), expected: Vec::new() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "{}:{}: ", self.line, self.column)?;
        }
        write!(f, "{}", self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// Failures of the bounded model or of the solvers built on it.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ModelError {
    #[error("value domain exceeded: {value} is outside [{vmin}, {vmax}] ({context})")]
    ValueDomainExceeded { value: i64, vmin: i64, vmax: i64, context: String },
    #[error("address space exhausted: no free block of {cells} cell(s) among addresses 1..{addrs}")]
    AddressExhausted { cells: usize, addrs: usize },
    #[error("uniform assignment over empty range [{lo}, {hi}]")]
    EmptyUniformRange { lo: i64, hi: i64 },
    #[error("iteration budget of {iterations} exhausted, last residual {residual}")]
    BudgetExhausted { iterations: usize, residual: ExtQ },
    #[error("reachable fragment exceeds {cap} configurations (frontier {frontier})")]
    FragmentCap { cap: usize, frontier: usize },
    #[error("operand is not one-bounded: value {value} at {state}")]
    NotOneBounded { value: ExtQ, state: String },
    #[error("left operand of a separating implication must be 0/1-valued")]
    NotPredicate,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("heaps overlap at addresses {0:?}")]
    HeapOverlap(Vec<i64>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Unsupported(String),
}

impl ModelError {
    /// CLI exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ModelError::ValueDomainExceeded { .. }
            | ModelError::AddressExhausted { .. }
            | ModelError::FragmentCap { .. } => 3,
            ModelError::BudgetExhausted { .. } => 4,
            _ => 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum QslError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl QslError {
    pub fn exit_code(&self) -> i32 {
        match self {
            QslError::Model(m) => m.exit_code(),
            _ => 2,
        }
    }
}
