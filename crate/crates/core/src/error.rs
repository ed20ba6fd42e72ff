use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("enumeration budget exceeded: need {required} tables, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("orbit class {0} is not realizable under the given shape")]
    Unrealizable(String),

    #[error("witness shapes differ: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(u32, u32, u32, u32),

    #[error("dual construction degenerated: {0}")]
    Degenerate(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("LP instance exceeds the solver cap: {0} bits > {1} bits")]
    LpCapExceeded(u32, u32),

    #[error("division by zero")]
    DivisionByZero,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
