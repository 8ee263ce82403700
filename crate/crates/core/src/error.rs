use thiserror::Error;

use crate::game::RecallViolation;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The game file is not well-formed JSON.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    /// The game file is valid JSON but does not describe a valid game.
    #[error("invalid game at {path}: {message}")]
    InvalidGame { path: String, message: String },
    /// At least one player forgets an earlier information set or action.
    #[error("game does not have perfect recall ({} violation(s))", .0.len())]
    ImperfectRecall(Vec<RecallViolation>),
    #[error("unknown history {0:?}")]
    UnknownHistory(Vec<String>),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("realization plan violates flow constraints (max residual {0:e})")]
    Infeasible(f64),
    #[error("realization plan entry {0} is not strictly positive")]
    NonPositive(f64),
    #[error("rationality parameter is infinite at t = 0")]
    ZeroT,
    #[error("{what} has {count} entries, above the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        count: u128,
        cap: u128,
    },
    #[error("{what} did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot export an empty path")]
    EmptyPath,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
