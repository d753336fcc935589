use thiserror::Error;

/// Errors raised by the solvers and model constructors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("non-finite value produced by {context}")]
    NonFinite { context: String },

    #[error("transition probability {prob} out of [0,1] at step {step}, node {node}: time step too large for the drift")]
    ProbabilityOutOfRange { step: usize, node: usize, prob: f64 },

    #[error("binomial lattice requires a state-independent volatility (found {found} vs {expected} at step {step})")]
    NonConstantVolatility {
        step: usize,
        found: f64,
        expected: f64,
    },

    #[error("kappa * dt = {kappa_dt} >= 1: one-step map is not monotone in y")]
    NotMonotone { kappa_dt: f64 },

    #[error("supremum attained on the z-grid boundary (q = {q}); enlarge the grid radius")]
    BoundaryHit { q: f64 },

    #[error("exponential overflow in {context}; rescale the data")]
    Overflow { context: String },

    #[error("tridiagonal solve broke down at row {row}")]
    TridiagonalBreakdown { row: usize },

    #[error("payoff at step {step}, node {node} must be {expected} for this stopping rule")]
    PayoffMismatch {
        step: usize,
        node: usize,
        expected: &'static str,
    },

    #[error("refusing to enumerate 2^{interior_nodes} stopping rules (cap is 2^{cap})")]
    EnumerationTooLarge { interior_nodes: usize, cap: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }
}
