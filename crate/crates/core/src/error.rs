use thiserror::Error;

use crate::rational::Rat;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("job `{id}` of size {size} exceeds the largest machine capacity {capacity}")]
    InfeasibleJob {
        id: String,
        size: Box<Rat>,
        capacity: Box<Rat>,
    },

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("type index {0} is out of range")]
    TypeOutOfRange(usize),

    #[error("one-shot search exceeded {limit} explored nodes")]
    SearchSpaceExceeded { limit: u64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("oracle budget exhausted after {nodes} nodes (best cost found: {best:?})")]
    BudgetExhausted { nodes: u64, best: Option<Rat> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
