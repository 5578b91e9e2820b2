use crate::order::Order;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum EngineError {
    #[error("{context}: expected ord >= {expected}, got ord = {actual}")]
    OrderTooLow {
        context: &'static str,
        expected: usize,
        actual: Order,
    },
    #[error("composition argument has a nonzero constant term")]
    CompositionConstantTerm,
    #[error("transformation is not normalized: {0}")]
    NotNormalized(String),
    #[error("no non-singular formal integral: s has a nonzero coefficient at order {tau}")]
    NotIntegrable { tau: usize },
    #[error("leading coefficient of r is not +1 or -1; run scale normalization first")]
    UnnormalizedLeading,
    #[error("r vanishes identically; scaling normalization does not apply")]
    ZeroSeries,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
