use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),

    #[error("infeasible instance: {devices} devices but only {blocks} resource blocks")]
    Infeasible { devices: usize, blocks: usize },

    #[error("allocation is incomplete: {assigned} of {devices} devices assigned")]
    Incomplete { assigned: usize, devices: usize },

    #[error("action (server {server}, subcarrier {subcarrier}, device {device}) is not valid in this state")]
    InvalidAction {
        server: usize,
        subcarrier: usize,
        device: usize,
    },

    #[error("malformed allocation matrix: {0}")]
    Parse(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("every entry of the action mask is false")]
    AllMasked,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("enumeration refused: {count} complete states exceed the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("need at least {need} data points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("kernel matrix is not positive definite even with jitter {0:e}")]
    NotPositiveDefinite(f64),
}
