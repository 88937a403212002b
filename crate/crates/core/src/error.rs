use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid interval ({lo}, {hi}): need lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid sample plan: {0}")]
    InvalidPlan(String),
    #[error("generator is not strictly monotone: derivative changes sign between {left} and {right}")]
    NotMonotone { left: f64, right: f64 },
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("weight alpha = {0} must lie strictly between 0 and 1")]
    InvalidWeight(f64),
    #[error("{u} lies outside the generator range ({lo}, {hi})")]
    OutsideRange { u: f64, lo: f64, hi: f64 },
    #[error("could not bracket a preimage of {u}")]
    BracketFailure { u: f64 },
    #[error("invalid family spec: {0}")]
    InvalidSpec(String),
    #[error("interval too short: {0}")]
    TooShort(String),
    #[error("no sign change found on ({a}, {b})")]
    NoSignChange { a: f64, b: f64 },
    #[error("invalid sample data: {0}")]
    InvalidSamples(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
