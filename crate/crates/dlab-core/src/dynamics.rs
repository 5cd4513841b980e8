//! Drift fields and losses for every model variant.
//!
//! All evaluations are plain algebra, total on the unit square, and safe to
//! call from any thread.

use crate::model::{ModelParams, ModelVariant, PhaseState, SkillDistribution, Velocity};

/// Skill-drift bracket shared by every assisted variant:
/// `(1-p)(1-theta) + delta*p*(theta_d - theta)`.
///
/// Evaluated as `s * ((1-theta)/s - p)` with `s = (1-theta) + delta*(theta -
/// theta_d)`. This is the same polynomial, but it makes the bracket vanish
/// *identically* in floating point at `p = (1-theta)/s`, so the interior
/// saddle reported by the equilibria module has drift exactly zero rather
/// than a few ulps of rounding residue.
#[inline]
pub(crate) fn practice_decay_bracket(theta: f64, p: f64, delta: f64, theta_d: f64) -> f64 {
    let u = 1.0 - theta;
    let s = u + delta * (theta - theta_d);
    if s == 0.0 || p == 0.0 {
        // Limit of the bracket as s -> 0, and the exact value at p = 0; the
        // p = 0 case keeps zero-delegation orbits bit-identical to the
        // unassisted field.
        u
    } else {
        s * (u / s - p)
    }
}

/// Delegation-drift comparison for a deterministic assistant:
/// `(1-theta)^2 - (1-theta_a)^2`. Exactly zero at `theta == theta_a`.
#[inline]
pub(crate) fn loss_comparison(theta: f64, theta_a: f64) -> f64 {
    let u = 1.0 - theta;
    let ua = 1.0 - theta_a;
    u * u - ua * ua
}

/// Squared loss the assistant's output incurs in expectation.
#[inline]
pub(crate) fn assistant_squared_loss(params: &ModelParams) -> f64 {
    match &params.variant {
        ModelVariant::JaggedAi(dist) => dist.mean_squared_residual(),
        _ => {
            let ua = 1.0 - params.theta_a;
            ua * ua
        }
    }
}

/// Right-hand side of the chosen variant at a state.
///
/// The skill component is `theta(1-theta)` times the practice/decay bracket
/// (or `theta(1-theta)^2` for the unassisted variant, which also freezes
/// `p`). The delegation component is `kappa*p*(1-p)` times a comparison of
/// the learner's and the assistant's losses, with the comparison depending
/// on the variant.
pub fn eval_drift(params: &ModelParams, state: &PhaseState) -> Velocity {
    let theta = state.theta;
    let p = state.p;
    let u = 1.0 - theta;

    if let ModelVariant::NoAi = params.variant {
        return Velocity {
            d_theta: theta * u * u,
            d_p: 0.0,
        };
    }

    let bracket = practice_decay_bracket(theta, p, params.delta, params.theta_d);
    let d_theta = theta * u * bracket;
    let gate = params.kappa * p * (1.0 - p);

    let d_p = match &params.variant {
        ModelVariant::Simplified | ModelVariant::General => {
            gate * loss_comparison(theta, params.theta_a)
        }
        ModelVariant::JaggedAi(dist) => gate * (u * u - dist.mean_squared_residual()),
        ModelVariant::MisperceivedAi { theta_tilde_a } => {
            let perceived = loss_comparison(theta, *theta_tilde_a);
            let actual = loss_comparison(theta, params.theta_a);
            gate * ((1.0 - p) * perceived + p * actual)
        }
        ModelVariant::Asymmetric { alpha } => {
            let f = gate * loss_comparison(theta, params.theta_a);
            if f >= 0.0 {
                f
            } else {
                alpha * f
            }
        }
        ModelVariant::DetectionPenalty { q } => {
            let ua = 1.0 - params.theta_a;
            gate * (u * u - (1.0 - q) * (ua * ua) - q * ua.abs())
        }
        ModelVariant::NoAi => unreachable!("handled above"),
    };

    Velocity { d_theta, d_p }
}

/// Expected instantaneous loss `(1-p)(1-theta)^2 + p * L_a`, where `L_a` is
/// the assistant's expected squared loss (`(1-theta_a)^2`, or the
/// distribution mean for the jagged variant).
pub fn loss(theta: f64, p: f64, params: &ModelParams) -> f64 {
    let u = 1.0 - theta;
    (1.0 - p) * u * u + p * assistant_squared_loss(params)
}

/// Deterministic skill with the same expected squared loss as a random one:
/// `1 - sqrt(E[(1-s)^2])`.
pub fn effective_skill(dist: &SkillDistribution) -> f64 {
    (1.0 - dist.mean_squared_residual().sqrt()).clamp(0.0, 1.0)
}
