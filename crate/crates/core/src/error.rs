use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid utility interval: {0}")]
    InvalidInterval(String),

    #[error("invalid act: {0}")]
    InvalidAct(String),

    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("value {value} at state {state} lies outside the domain {domain}")]
    OutOfDomain {
        state: usize,
        value: f64,
        domain: String,
    },

    #[error("model domain {model} is incompatible with utility interval {interval}")]
    DomainIncompatible { model: String, interval: String },

    #[error("objective is +inf on every probed belief")]
    ObjectiveEverywhereInfinite,

    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),

    #[error("no feasible sample could be drawn: {0}")]
    EmptySampleSpace(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("functional is not monotone along the envelope direction (I({lower}) = {lower_value} > I({upper}) = {upper_value})")]
    NonMonotone {
        lower: String,
        upper: String,
        lower_value: f64,
        upper_value: f64,
    },

    #[error("functional is not differentiable at certainty: {0}")]
    NotDifferentiable(String),

    #[error("functional is not nice at certainty: {0}")]
    NotNice(String),

    #[error("dual grid misaligned: {0}")]
    GridMisaligned(String),

    #[error("transfers must sum to zero, got {0}")]
    UnbalancedTransfers(f64),

    #[error("invalid economy: {0}")]
    InvalidEconomy(String),

    #[error("budget identity fails for agent {agent}: cost {cost} exceeds budget {budget}")]
    BudgetViolated {
        agent: usize,
        cost: f64,
        budget: f64,
    },

    #[error("csv export failed: {0}")]
    Csv(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
