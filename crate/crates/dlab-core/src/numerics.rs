//! Central numeric tolerances and step sizes.
//!
//! Every tolerance used by the crate lives here so tests can reason about
//! (and tighten) them in one place. Values are chosen for reproducibility of
//! golden results rather than speed.

/// Default fixed step for the 4th-order integrator.
pub const ODE_STEP: f64 = 1e-3;

/// Max-norm radius for "has reached an equilibrium" decisions.
pub const EPS_EQ: f64 = 1e-6;

/// Default time budget for limit classification. The attracting corners are
/// non-hyperbolic along one axis, so approach is algebraic and slow.
pub const T_MAX: f64 = 1e4;

/// Per-step clamping beyond this magnitude is treated as an integration
/// error rather than silently absorbed.
pub const CLAMP_TOL: f64 = 1e-12;

/// Offset along the stable eigenvector used to seed backward integration.
pub const SEP_SEED_OFFSET: f64 = 1e-6;

/// Backward orbits stop once within this max-norm distance of a corner.
pub const SEP_CORNER_TOL: f64 = 1e-4;

/// Default node count of the resampled separatrix polyline.
pub const SEP_RESOLUTION: usize = 512;

/// Hard cap on backward-integration steps per manifold branch.
pub const SEP_MAX_STEPS: usize = 60_000_000;

/// Decreases in `theta` along the raw manifold orbit larger than this are a
/// computation error; smaller wiggles are dropped as duplicates.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Half-width of the band around the separatrix where sign-based basin
/// classification defers to simulation.
pub const BOUNDARY_BAND: f64 = 1e-4;

/// Grid step for scanning the performance gap for sign changes.
pub const SCAN_STEP: f64 = 1e-3;

/// Bisection stops once the sign-change bracket is this tight.
pub const BISECT_TOL: f64 = 1e-6;

/// Pasting exponents within this distance of 1 are rejected as singular.
pub const PASTING_TOL: f64 = 1e-9;

/// Denominators smaller than this exclude a record from estimation.
pub const ESTIMATION_EXCLUSION_TOL: f64 = 1e-9;
