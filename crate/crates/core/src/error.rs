use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "truncation too small: tail mass {tail:.3e} above n_max = {n_max} exceeds {limit:.0e}"
    )]
    TruncationTooSmall { n_max: usize, tail: f64, limit: f64 },

    #[error("basis label {label} outside [{first}, {last}]")]
    IndexOutOfRange { label: i64, first: i64, last: i64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("measurement outcome is impossible (probability {probability:.3e})")]
    ZeroProbability { probability: f64 },

    #[error("integrator step underflow at t = {time:.6e} s (step {step:.3e} s)")]
    StepUnderflow { time: f64, step: f64 },

    #[error("integrator exceeded {max_steps} steps")]
    TooManySteps { max_steps: usize },

    #[error("fidelity threshold {threshold} not reached within {cap} rounds")]
    NotReached { threshold: f64, cap: usize },

    #[error("degenerate input: need at least {needed} points, got {got}")]
    DegenerateInput { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach the 1-based protocol round at which the error happened.
    pub(crate) fn in_round(self, round: usize) -> Self {
        match self {
            e @ Error::Round { .. } => e,
            e => Error::Round {
                round,
                source: Box::new(e),
            },
        }
    }

    /// Strip any round wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::Round { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
