//! Simulation and analysis toolkit for a planar skill-delegation learning model.
//!
//! The state is a point `(theta, p)` in the unit square: `theta` is the
//! learner's skill and `p` the probability of delegating a task to an
//! assistant of fixed skill `theta_a`. Practice pushes skill up, delegation
//! lets it decay, and the delegation level itself drifts toward whichever
//! option currently incurs the smaller loss. The resulting vector field has
//! two attracting corners separated by the stable manifold of an interior
//! saddle; most questions about the model reduce to locating that manifold.
//!
//! Module map:
//! - [`model`]: parameter and state types, validation.
//! - [`dynamics`]: drift fields for every model variant, losses.
//! - [`simulate`]: ODE/discrete/SDE integrators and limit classification.
//! - [`equilibria`]: fixed points, Jacobians, eigen-analysis.
//! - [`separatrix`]: basin boundary, its analytic approximation, basin grids.
//! - [`performance`]: assisted-vs-unassisted loss gap and crossing times.
//! - [`estimation`]: parameter recovery from session logs.

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod estimation;
pub mod model;
pub mod numerics;
pub mod performance;
pub mod separatrix;
pub mod simulate;

pub use error::{CoreError, Result};
pub use model::{
    ModelParams, ModelVariant, PhaseState, SkillDistribution, ValidationIssue, ValidationReport,
    Velocity,
};
pub use simulate::{DiscreteSimConfig, LimitLabel, SdeConfig, Trajectory};
