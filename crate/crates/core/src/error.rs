use thiserror::Error;

/// Everything that can go wrong while building or evaluating a paging model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("search distribution is empty")]
    EmptyDistribution,

    #[error("invalid probability {value} at position {index}: {reason}")]
    InvalidProbability {
        index: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("zero remaining probability mass at search position {position}")]
    ZeroRemainingMass { position: usize },

    #[error("malformed chain: {0}")]
    MalformedChain(String),

    #[error("chain is not absorbing: I - Q is singular")]
    NonAbsorbing,

    #[error("offered load must be positive and finite, got {0}")]
    NonPositiveLoad(f64),

    #[error("service rate must be positive and finite, got {0}")]
    NonPositiveRate(f64),

    #[error("unstable: offered load exceeds channels (A = {load}, C = {channels})")]
    Unstable { load: f64, channels: u32 },

    #[error("unknown scenario `{0}` (expected `sequential` or `concurrent`)")]
    UnknownScenario(String),

    #[error("invalid carrier system: {0}")]
    InvalidSystem(String),

    #[error("carrier {0} is not a valid location")]
    InvalidLocation(usize),

    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),

    #[error("search exhausted every carrier without finding the user")]
    Exhausted,

    #[error("no free channel appeared within {0} rounds")]
    Starved(u32),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("degenerate sample for confidence interval: {0}")]
    DegenerateSample(String),

    #[error("{0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
