//! Error taxonomy shared by every module in the crate.

use crate::text::SourceSpan;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

fn at(span: &Option<SourceSpan>) -> String {
    match span {
        Some(s) => format!(" at {s}"),
        None => String::new(),
    }
}

#[derive(Debug, Error)]
pub enum Error {
    // ----- model validation -----
    #[error("row {state} sums to {sum}{} (must be within 1e-9 of 1)", at(.span))]
    RowSumInvalid {
        state: usize,
        sum: f64,
        span: Option<SourceSpan>,
    },

    #[error("transition {state} -> {target} has non-positive weight {weight}{}", at(.span))]
    NegativeOrZeroWeight {
        state: usize,
        target: usize,
        weight: f64,
        span: Option<SourceSpan>,
    },

    #[error("state reference {reference} is out of range (model has {n_states} states){}", at(.span))]
    DanglingTarget {
        reference: usize,
        n_states: usize,
        span: Option<SourceSpan>,
    },

    #[error("dtmc state {state} has no outgoing transitions{}", at(.span))]
    EmptyDtmcRow {
        state: usize,
        span: Option<SourceSpan>,
    },

    // ----- text formats -----
    #[error("{span}: {message}")]
    Syntax { span: SourceSpan, message: String },

    // ----- formula / evaluation -----
    #[error("bound type mismatch: {message}")]
    BoundTypeMismatch { message: String },

    #[error("trace too short: {message}")]
    TraceTooShort { message: String },

    #[error("nested probability operators are not supported here")]
    NestedNotSupported,

    // ----- simulation -----
    #[error("simulation exceeded the hard cap of {cap} transitions before reaching the time bound")]
    HardCapExceeded { cap: u64 },

    // ----- hypothesis testing -----
    #[error("invalid strength: alpha={alpha}, beta={beta} leave no room between acceptance bounds")]
    InvalidStrength { alpha: f64, beta: f64 },

    #[error("invalid parameter: {message}")]
    InvalidParams { message: String },

    #[error("no sampling plan with at most {n_max} observations achieves the requested strength")]
    PlanSearchExhausted { n_max: u64 },

    #[error("plan requires exactly {expected} observations, got {got}")]
    WrongSampleCount { expected: u64, got: u64 },

    #[error("test already reached a decision; no further observations may be fed")]
    AlreadyDecided,

    #[error("no decision after {max} samples")]
    MaxSamplesExceeded { max: u64 },

    // ----- orchestration -----
    #[error("indifference region collapsed: adjusted thresholds p0={p0_adj}, p1={p1_adj} (inner error bounds too large)")]
    RegionCollapsed { p0_adj: f64, p1_adj: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed input text or parameters (as
    /// opposed to failures that arise while running a well-formed request).
    /// The CLI maps this to its usage/parse exit code.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::RowSumInvalid { .. }
                | Error::NegativeOrZeroWeight { .. }
                | Error::DanglingTarget { .. }
                | Error::EmptyDtmcRow { .. }
                | Error::Syntax { .. }
                | Error::BoundTypeMismatch { .. }
                | Error::NestedNotSupported
                | Error::InvalidStrength { .. }
                | Error::InvalidParams { .. }
        )
    }
}
