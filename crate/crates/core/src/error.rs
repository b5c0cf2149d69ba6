use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("scale parameter must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("truncation budget of {max_terms} terms exhausted before reaching tail bound {eps:e}")]
    TruncationBudgetExceeded { eps: f64, max_terms: usize },
    #[error("derivative order {order} exceeds the cap {cap}")]
    DerivativeOrderTooLarge { order: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid torus point: {0}")]
    InvalidPoint(String),
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
    #[error("value {0} outside the domain (0, 1)")]
    DomainError(f64),
    #[error("embedding grid too small: side {side} needs at least {needed} and must be even")]
    GridTooSmall { side: usize, needed: usize },
    #[error("invalid exponent {0}")]
    InvalidExponent(f64),
    #[error("invalid jump threshold {0}")]
    InvalidThreshold(f64),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid sampled family: {0}")]
    InvalidFamily(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("quadrature budget exceeded: {0}")]
    QuadratureBudgetExceeded(String),
    #[error("declared decay bound violated at s = {s}: |value| = {value:e} > {bound:e}")]
    DecayBoundViolated { s: f64, value: f64, bound: f64 },
    #[error("invalid fractional order {0}, expected 0 < alpha < 1")]
    InvalidOrder(f64),
    #[error("order {n} exceeds the enumeration cap {cap}")]
    OrderTooLarge { n: usize, cap: usize },
    #[error("need {needed} derivative values, got {got}")]
    InsufficientDerivatives { needed: usize, got: usize },
    #[error("grid incompatible with check {check}: {reason}")]
    IncompatibleGrid { check: String, reason: String },
    #[error("resource budget exceeded: {0}")]
    ResourceBudgetExceeded(String),
    #[error("constant ledger integrity failure: {0}")]
    LedgerMismatch(String),
    #[error("unknown check id {0}")]
    UnknownCheck(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
