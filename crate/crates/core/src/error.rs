use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("density matrix violates invariant: {0}")]
    InvalidState(String),

    #[error("step size underflow at t = {time:e} s (h = {step:e} s); problem too stiff for the explicit integrator")]
    StepUnderflow { time: f64, step: f64 },

    #[error("step limit of {steps} reached at t = {time:e} s")]
    StepLimit { time: f64, steps: usize },

    #[error("degenerate parameters: constrained steady-state system is singular or ill-conditioned (condition estimate {condition:e})")]
    Degenerate { condition: f64 },

    #[error("steady state requires the trace-conserving generator")]
    LiteralSteadyState,

    #[error("spectrum failed at {} grid point(s): {}", .0.len(), summarize(.0))]
    Spectrum(Vec<(usize, String)>),
}

fn summarize(failures: &[(usize, String)]) -> String {
    failures
        .iter()
        .take(3)
        .map(|(i, msg)| format!("[{i}] {msg}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { field, reason: reason.into() }
}
