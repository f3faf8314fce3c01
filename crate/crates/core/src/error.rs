use thiserror::Error;

use crate::model::{EntityId, GoodId, Transaction};

/// Errors raised while building or running a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid identifier {0:?}: identifiers must be non-empty and contain no whitespace or commas")]
    InvalidId(String),

    #[error("self-transaction rejected: {0} cannot give {1} to itself")]
    SelfTransaction(EntityId, GoodId),

    #[error("yield coefficient {0} outside [0, 1); a coefficient of 1 or more would drop the yield to zero in a single step")]
    CoefficientOutOfRange(f64),

    #[error("nominal value {0} must be finite and non-negative")]
    NegativeNominal(f64),

    #[error("yield coefficient is zero, so the balance has no finite limit")]
    NoFiniteLimit,

    #[error("no yield curve for transaction {0}")]
    MissingCurve(Transaction),

    #[error("undeclared entity {0}")]
    UndeclaredEntity(EntityId),

    #[error("undeclared good {0}")]
    UndeclaredGood(GoodId),

    #[error("state sequence needs at least one cycle state")]
    EmptyCycle,

    #[error("max_steps must be positive")]
    ZeroSteps,

    #[error("ambiguous force-all state at step {step}: {count} distinct maximal admissible transaction sets")]
    AmbiguousForceAll { step: usize, count: usize },

    #[error("{0} has no balance with itself")]
    SelfBalance(EntityId),

    #[error("balance must be finite, got {0}")]
    NonFiniteBalance(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
