use thiserror::Error;

/// Errors produced by field evaluation, integration and sampling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("modes disagree on physical parameters (hbar or mass)")]
    MismatchedParams,

    #[error("density {density:e} at x={x}, t={t} is at or below the node threshold {threshold:e}")]
    Node {
        x: f64,
        t: f64,
        density: f64,
        threshold: f64,
    },

    #[error("non-finite value while differentiating around x={x}, t={t}")]
    NonFinite { x: f64, t: f64 },

    #[error("step size underflow at t={t} (h={h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {max_steps} steps before reaching t={t_end}")]
    TooManySteps { max_steps: usize, t_end: f64 },

    #[error("trajectory {index}: {source}")]
    Trajectory { index: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
