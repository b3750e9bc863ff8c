use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor was handed parameters outside its domain.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// The origin is the one point the chart does not cover.
    #[error("the origin has no chart coordinates")]
    Origin,

    /// An input was structurally fine but outside an operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The chart inversion failed to meet its tolerance. Carries the best
    /// iterate so callers can report where the search ended up.
    #[error("chart inversion stalled after {iterations} iterations (residual {residual:.3e} at t = {t})")]
    NoConvergence {
        iterations: u32,
        residual: f64,
        t: f64,
    },
}
