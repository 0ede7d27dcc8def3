use thiserror::Error;

/// Errors surfaced by the analytical backends and the simulator.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violates its documented domain (non-positive SNR, zero rate,
    /// thresholds exceeding buffer sizes, and so on).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The stationary solver could not reach the requested residual. This is
    /// the typical outcome for degenerate chains, e.g. when the silent mode has
    /// probability one and the reachable state set carries no unique
    /// stationary distribution.
    #[error("stationary distribution did not converge (residual {residual:.3e})")]
    NonConvergent { residual: f64 },

    /// The closed-form occupancy recursion needs at least three packets of
    /// buffer space per queue.
    #[error("closed-form occupancy requires buffer capacities >= 3, got ({0}, {1})")]
    CapsTooSmall(u32, u32),

    /// A closed-form expression hit a vanishing denominator for the supplied
    /// region probabilities.
    #[error("numerical breakdown in closed form: {0}")]
    NumericalBreakdown(String),

    /// The requested expression is only defined for a symmetric channel.
    #[error("expression undefined for asymmetric channel gains ({0}, {1})")]
    AsymmetricChannel(f64, f64),
}
