use thiserror::Error;

/// Errors raised by the lab. Each variant names the failing stage so the
/// command-line front end can map it onto an exit status.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unbounded fiber: the polytope {{x >= 0 : Bt x = k alpha}} is not compact (recession direction {direction:?})")]
    UnboundedFiber { direction: Vec<String> },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("symbol term is not circle-invariant: |gamma| = {gamma} but |delta| = {delta}")]
    NotCircleInvariant { gamma: u64, delta: u64 },

    #[error("polynomial test function of degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("eigensolve failed to converge for k = {k}")]
    EigenNonConvergence { k: u64 },

    #[error("ill-conditioned fit: condition number {condition:.3e} exceeds {limit:.0e}; widen the k range")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("rejection sampler efficiency {efficiency:.3e} is below {floor:.0e}")]
    RejectionEfficiency { efficiency: f64, floor: f64 },

    #[error("zero Fourier index is excluded from the model basis")]
    ZeroModelIndex,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
