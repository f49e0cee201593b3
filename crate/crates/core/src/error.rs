use thiserror::Error;

/// Unified error type for the crate.
///
/// Variants map onto the three refusal classes the library distinguishes:
/// rejected inputs, refused resource budgets, and malformed persisted state.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A request would exceed a hard resource budget and is refused up front.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// A snapshot or config document failed structural validation.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
