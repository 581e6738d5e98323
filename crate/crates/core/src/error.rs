use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("root solve for branch {branch} at y = {target} did not converge (branch domains mis-specified?)")]
    RootSolve { branch: usize, target: f64 },

    #[error("mixing time exceeds cap {cap} at eps = {eps}")]
    MixingCap { cap: usize, eps: f64 },

    #[error("cylinder tree needs {needed} nodes, cap is {cap}; lower n")]
    NodeCap { needed: usize, cap: usize },

    #[error("cover infeasible: eta = {eta} exceeds reachable sampled mass {mass}")]
    CoverInfeasible { eta: f64, mass: f64 },

    #[error("no bridge from segment {segment} within {cap} transition steps")]
    BridgeNotFound { segment: usize, cap: usize },

    #[error("segment {segment} is not in the good collection")]
    NotGood { segment: usize },

    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: usize, right: usize },

    #[error("power iteration did not converge after {iters} iterations (last change {change:e})")]
    NoConvergence { iters: usize, change: f64 },

    #[error("point carries backward data to depth {have}, {want} requested")]
    MissingItinerary { have: usize, want: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
