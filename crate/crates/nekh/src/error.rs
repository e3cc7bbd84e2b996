use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A domain-type invariant was violated at construction time.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// A theorem constraint required by an operation does not hold.
    #[error("constraint `{name}` violated: lhs = {lhs:.6e}, rhs = {rhs:.6e}")]
    Constraint { name: String, lhs: f64, rhs: f64 },

    /// Closed-form evaluation left its validity region (negative discriminant).
    #[error("majorant domain exceeded: {0}")]
    MajorantDomain(String),

    /// An enumeration would exceed the configured size cap.
    #[error("enumeration of {count} lattice points exceeds cap {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    /// Newton or fixed-point iteration failed to converge.
    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),

    /// Adaptive integrator step size fell below the floor.
    #[error("step size underflow at delta = {delta:.6e} (h = {h:.3e})")]
    StepUnderflow { delta: f64, h: f64 },

    /// A numerically certified bound failed on the sample set.
    #[error("certification failed: {0}")]
    Certification(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid { what, why: why.into() }
    }
}
