use alloc::string::String;

/// Errors raised by design routines, control laws and the simulation loop.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("simulation diverged at t = {t} s: state component {component} = {value}")]
    Diverged { t: f64, component: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("improper transfer function: numerator degree {num_degree} exceeds denominator degree {den_degree}")]
    Improper { num_degree: usize, den_degree: usize },

    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(String),

    #[error("matrix is singular or ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("control allocation singular at t = {t} s: |sin(theta)| = {sin_theta} < 0.1")]
    AllocationSingularity { t: f64, sin_theta: f64 },

    #[error("analysis window [{from}, {to}] s lies outside the trace [{start}, {end}] s")]
    WindowOutsideTrace {
        from: f64,
        to: f64,
        start: f64,
        end: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
