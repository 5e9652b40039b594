//! Error type shared by every numerical module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model evaluation produced a non-finite {component} at t = {t}")]
    ModelEvaluation { component: String, t: f64 },

    #[error("variational matrix A is near-singular (condition number {condition:.3e} > cap {cap:.3e}) at t = {t}")]
    CausticProximity { t: f64, condition: f64, cap: f64 },

    #[error("step size underflow at t = {t} (h = {step:.3e})")]
    StepSizeUnderflow { t: f64, step: f64 },

    #[error("packet mass {outside:.3e} lies outside the grid box (threshold {threshold:.1e})")]
    DomainCoverage { outside: f64, threshold: f64 },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("matrix is not in the Siegel half-space: {reason}")]
    SiegelViolation { reason: String },

    #[error("matrix is not special unitary: {reason}")]
    NotUnitary { reason: String },

    #[error("quadrature needs {nodes} nodes, above the cap of {cap}")]
    BudgetExceeded { nodes: usize, cap: usize },

    #[error("singular Jacobian dq_t/dp at converged root p = {momentum:?} (smallest singular value {singular_value:.3e})")]
    CausticAtRoot { momentum: Vec<f64>, singular_value: f64 },

    #[error("no classical orbit found in the search box after {starts} starts")]
    NoBranchFound { starts: usize },

    #[error("caustic crossing near t = {t} could not be localised")]
    UnresolvedCrossing { t: f64 },

    #[error("split-step stability guard: dt * max kinetic phase = {phase:.3} >= pi")]
    StabilityGuard { phase: f64 },

    #[error("quadrature node {node} failed: {source}")]
    Node {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures that stem from the numerics (caustics, coverage,
    /// stability) rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::GridMismatch | Error::NotUnitary { .. } => false,
            Error::Node { source, .. } => source.is_numerical(),
            _ => true,
        }
    }
}
