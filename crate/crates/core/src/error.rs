use thiserror::Error;

use crate::stability::StabilityVerdict;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vertex lists are 1-based.
    #[error("graph is disconnected: components {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("removing edge ({i}, {j}) disconnects the graph into {components:?}")]
    BridgeRemoval {
        i: usize,
        j: usize,
        components: Vec<Vec<usize>>,
    },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    EigenConvergence { sweeps: usize, residual: f64 },

    #[error("platoon is not stable: {}", .0.summary())]
    Unstable(Box<StabilityVerdict>),

    #[error("kernel diverges at the stability boundary: (s1, s2) = ({s1}, {s2}) is outside S")]
    KernelDomain { s1: f64, s2: f64 },

    /// Pair indices are 1-based.
    #[error("degenerate conditioning: {detail} (pairs {pairs:?})")]
    Degenerate { detail: String, pairs: Vec<usize> },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("simulation diverged at t = {time:.3} s (dominant mode {mode})")]
    Divergence { time: f64, mode: usize },

    #[error("insufficient samples in conditioning window: {count} < {required}")]
    InsufficientData { count: usize, required: usize },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::EigenConvergence { .. } | Error::Numeric(_) | Error::Divergence { .. }
        )
    }
}
