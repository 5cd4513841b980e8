//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;

/// Everything that can go wrong in the analysis layer.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Parameters fail range or regime validation.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Parameters are valid for simulation but degenerate for the requested
    /// analysis (for example `theta_a` on the boundary, where the saddle
    /// formula loses meaning).
    #[error("degenerate parameters: {0}")]
    DegenerateParams(String),

    /// A scalar argument lies outside its mathematical domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// A simulation configuration violates its own validity condition.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An integration step left the unit square by more than the clamp
    /// tolerance, i.e. the step size is too large for the field.
    #[error("step too large at t = {t}: clamp magnitude {magnitude:e} exceeds tolerance")]
    StepTooLarge { t: f64, magnitude: f64 },

    /// The drift or state became non-finite during integration.
    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    /// Backward integration of the stable manifold failed to reach the
    /// expected corner, or produced a non-monotone curve.
    #[error("stable-manifold computation failed: {0}")]
    ManifoldEscape(String),

    /// A pasting exponent of the piecewise separatrix is too close to 1,
    /// where the breakpoint formulas are singular.
    #[error("pasting exponent {0} within 1e-9 of 1; breakpoint formula singular")]
    SingularPasting(f64),

    /// The requested operation is not defined for this model variant.
    #[error("unsupported variant for this operation: {0}")]
    UnsupportedVariant(String),

    /// An estimator received no usable records.
    #[error("empty data: {0}")]
    EmptyData(String),

    /// All candidate records for an estimator were degenerate.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// A search exhausted its time budget without an answer.
    #[error("unresolved within the time budget: {0}")]
    Unresolved(String),
}
