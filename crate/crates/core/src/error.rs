use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("signal {signal} of agent {agent} has zero marginal probability")]
    ZeroMarginal { agent: usize, signal: usize },
    #[error("operation requires {expected} agents, instance has {found}")]
    Arity { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown index: {0}")]
    Index(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("degenerate belief: {0}")]
    DegenerateBelief(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("distribution {0} carries no conditional-independence factorization")]
    MissingFactorization(usize),
    #[error("construction degenerated: {0}")]
    DegenerateConstruction(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
