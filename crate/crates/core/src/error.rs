use alloc::string::String;

/// Errors raised anywhere in the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("direct sum violation: {0}")]
    DirectSumViolation(String),
    #[error("degenerate two-form (condition number {condition:e})")]
    DegenerateForm { condition: f64 },
    #[error("algebra splitting failed: {0}")]
    SplitFailure(String),
    #[error("dimension assumption fails at sample {0}")]
    DimensionAssumptionFailure(usize),
    #[error("integration step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
