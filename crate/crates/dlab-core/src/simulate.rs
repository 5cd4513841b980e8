//! Time integration: deterministic ODE, discrete stochastic updates, SDE
//! paths, the closed-form unassisted-time oracle, and limit classification.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{effective_skill, eval_drift};
use crate::equilibria::saddle_point;
use crate::error::{CoreError, Result};
use crate::model::{ModelParams, ModelVariant, PhaseState, Velocity};
use crate::numerics;

/// Where a trajectory ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitLabel {
    /// Converged to the practice corner `(1, 0)`.
    HighSkill,
    /// Converged to the full-delegation rest point (`(0, 1)`, or `(theta_d,
    /// 1)` when a default skill is set).
    LowSkill,
    /// Ended at or next to a non-attracting rest point (the interior saddle,
    /// or an exact source corner).
    SaddleNeighborhood,
    /// Ran out of time without committing.
    Unresolved,
}

/// Time-stamped states from any of the integrators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Strictly increasing times starting at 0.
    pub times: Vec<f64>,
    /// One state per time stamp, all inside the unit square.
    pub states: Vec<PhaseState>,
    pub terminal: LimitLabel,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> PhaseState {
        *self.states.last().expect("trajectories are never empty")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, PhaseState)> + '_ {
        self.times.iter().copied().zip(self.states.iter().copied())
    }

    /// State at an arbitrary time by linear interpolation; clamps to the
    /// recorded range.
    pub fn state_at(&self, t: f64) -> PhaseState {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => self.states[i],
            Err(0) => self.states[0],
            Err(i) if i >= self.len() => self.final_state(),
            Err(i) => {
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let (a, b) = (self.states[i - 1], self.states[i]);
                let w = (t - t0) / (t1 - t0);
                PhaseState {
                    theta: a.theta + w * (b.theta - a.theta),
                    p: a.p + w * (b.p - a.p),
                }
            }
        }
    }
}

/// Configuration of the discrete stochastic simulation.
///
/// One update round corresponds to model time `2 * eta`: the expected
/// per-round increments are exactly the drift times that interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSimConfig {
    /// Learning step size, > 0.
    pub eta: f64,
    /// Number of update rounds.
    pub n_steps: usize,
    /// Seed for the delegation coin flips.
    pub seed: u64,
}

impl DiscreteSimConfig {
    /// The multiplicative updates stay inside `[0, 1]` as long as
    /// `2 * eta * max(1, delta, kappa) < 1`; reject configurations that
    /// cannot guarantee it.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(CoreError::InvalidConfig(format!(
                "eta = {} must be positive",
                self.eta
            )));
        }
        let drift_bound = 1.0_f64.max(params.delta).max(params.kappa);
        if 2.0 * self.eta * drift_bound >= 1.0 {
            return Err(CoreError::InvalidConfig(format!(
                "eta = {} too large: one update could leave [0, 1] (needs 2*eta*{drift_bound} < 1)",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Configuration of the Euler-Maruyama delegation-noise simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    /// Noise level on the delegation equation, >= 0. Zero recovers the
    /// deterministic path up to Euler truncation error.
    pub sigma: f64,
    /// Euler-Maruyama time step, > 0.
    pub step: f64,
    pub seed: u64,
    pub t_end: f64,
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(CoreError::InvalidConfig(format!(
                "sigma = {} must be nonnegative",
                self.sigma
            )));
        }
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(CoreError::InvalidConfig(format!(
                "step = {} must be positive",
                self.step
            )));
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(CoreError::InvalidConfig(format!(
                "t_end = {} must be nonnegative",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// One classical 4th-order step. Also returns the drift at the starting
/// state, which callers use for stationarity checks at no extra cost.
fn rk4_step(params: &ModelParams, state: &PhaseState, h: f64) -> (PhaseState, Velocity) {
    let at = |theta: f64, p: f64| eval_drift(params, &PhaseState { theta, p });
    let k1 = eval_drift(params, state);
    let k2 = at(
        state.theta + 0.5 * h * k1.d_theta,
        state.p + 0.5 * h * k1.d_p,
    );
    let k3 = at(
        state.theta + 0.5 * h * k2.d_theta,
        state.p + 0.5 * h * k2.d_p,
    );
    let k4 = at(state.theta + h * k3.d_theta, state.p + h * k3.d_p);
    let next = PhaseState {
        theta: state.theta
            + h / 6.0 * (k1.d_theta + 2.0 * k2.d_theta + 2.0 * k3.d_theta + k4.d_theta),
        p: state.p + h / 6.0 * (k1.d_p + 2.0 * k2.d_p + 2.0 * k3.d_p + k4.d_p),
    };
    (next, k1)
}

/// Clamp a freshly stepped state into the unit square, failing if the
/// overshoot exceeds the clamp tolerance.
fn clamp_checked(state: PhaseState, t: f64) -> Result<PhaseState> {
    if !state.is_finite() {
        return Err(CoreError::NonFinite { t });
    }
    let excess = |x: f64| (x - 1.0).max(-x).max(0.0);
    let magnitude = excess(state.theta).max(excess(state.p));
    if magnitude > numerics::CLAMP_TOL {
        return Err(CoreError::StepTooLarge { t, magnitude });
    }
    Ok(PhaseState::clamped(state.theta, state.p))
}

/// Attracting rest points of the variant, paired with their labels.
///
/// The unassisted variant has no attracting delegation corner; it converges
/// to skill 1 with delegation frozen, reported as `HighSkill`.
fn stable_targets(params: &ModelParams) -> Vec<(PhaseState, LimitLabel)> {
    match params.variant {
        ModelVariant::NoAi => Vec::new(),
        _ => vec![
            (PhaseState { theta: 1.0, p: 0.0 }, LimitLabel::HighSkill),
            (
                PhaseState {
                    theta: params.theta_d,
                    p: 1.0,
                },
                LimitLabel::LowSkill,
            ),
        ],
    }
}

fn corner_label(params: &ModelParams, state: &PhaseState) -> Option<LimitLabel> {
    if let ModelVariant::NoAi = params.variant {
        if 1.0 - state.theta < numerics::EPS_EQ {
            return Some(LimitLabel::HighSkill);
        }
        return None;
    }
    stable_targets(params)
        .into_iter()
        .find(|(target, _)| state.linf_dist(target) < numerics::EPS_EQ)
        .map(|(_, label)| label)
}

/// Fixed-step 4th-order integration of the chosen variant.
///
/// States are clamped into the unit square after every step; clamping beyond
/// [`numerics::CLAMP_TOL`] is an error rather than a silent correction. The
/// horizon is rounded to a whole number of steps. The terminal label reports
/// corner arrival within [`numerics::EPS_EQ`] in max-norm, else `Unresolved`
/// (approach to the corners is algebraic, so short runs normally end
/// unresolved; see [`classify_limit`] for basin membership).
pub fn integrate_ode(
    params: &ModelParams,
    init: &PhaseState,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    params.validated()?;
    if !init.in_unit_square() {
        return Err(CoreError::DomainError(format!(
            "initial state ({}, {}) outside the unit square",
            init.theta, init.p
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(CoreError::DomainError(format!("step = {step} must be positive")));
    }
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(CoreError::DomainError(format!(
            "t_end = {t_end} must be nonnegative"
        )));
    }

    let n_steps = (t_end / step).round() as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(*init);

    let mut state = *init;
    for k in 0..n_steps {
        let t_next = (k + 1) as f64 * step;
        let (next, _) = rk4_step(params, &state, step);
        state = clamp_checked(next, t_next)?;
        times.push(t_next);
        states.push(state);
    }

    let terminal = corner_label(params, &state).unwrap_or(LimitLabel::Unresolved);
    Ok(Trajectory {
        times,
        states,
        terminal,
    })
}

/// Skill thresholds beyond which an extreme delegation level can never
/// recover: with `p` pinned near 0 the delegation drift stays negative once
/// `theta` exceeds the first threshold, and with `p` pinned near 1 it stays
/// positive while `theta` is below the second. Entering either trap decides
/// the limit.
fn trap_thresholds(params: &ModelParams) -> Option<(f64, f64)> {
    match &params.variant {
        ModelVariant::Simplified | ModelVariant::General | ModelVariant::Asymmetric { .. } => {
            Some((params.theta_a, params.theta_a))
        }
        ModelVariant::JaggedAi(dist) => {
            let eff = effective_skill(dist);
            Some((eff, eff))
        }
        ModelVariant::MisperceivedAi { theta_tilde_a } => Some((
            params.theta_a.max(*theta_tilde_a),
            params.theta_a.min(*theta_tilde_a),
        )),
        ModelVariant::DetectionPenalty { q } => {
            let ua = 1.0 - params.theta_a;
            let threshold = 1.0 - ((1.0 - q) * ua * ua + q * ua).sqrt();
            Some((threshold, threshold))
        }
        ModelVariant::NoAi => None,
    }
}

/// Decide which limit an initial state converges to.
///
/// Integrates with the default step until the orbit either reaches the
/// [`numerics::EPS_EQ`] ball of an attracting corner or enters a one-way trap
/// region (see [`trap_thresholds`]) that guarantees the limit. The trap exit
/// is essential: near the attracting corners one eigenvalue is zero, the
/// approach is algebraic (distance shrinking like `1/t`), and no practical
/// time budget reaches the `EPS_EQ` ball itself.
///
/// Exact rest points that attract nothing (the interior saddle, the source
/// corners) report `SaddleNeighborhood`. `Unresolved` means the time budget
/// expired before any of the above.
pub fn classify_limit(params: &ModelParams, init: &PhaseState, t_max: f64) -> LimitLabel {
    if !params.validate().is_ok() || !init.in_unit_square() || !(t_max > 0.0) {
        return LimitLabel::Unresolved;
    }

    let h = numerics::ODE_STEP;
    let n_max = (t_max / h).ceil() as usize;
    let traps = trap_thresholds(params);
    let targets = stable_targets(params);

    let mut state = *init;
    for _ in 0..n_max {
        if let Some(label) = committed(params, &state, &traps, &targets) {
            return label;
        }
        let (next, drift_here) = rk4_step(params, &state, h);
        if drift_here.d_theta == 0.0 && drift_here.d_p == 0.0 {
            // An exact rest point that is not an attracting corner.
            return LimitLabel::SaddleNeighborhood;
        }
        state = match clamp_checked(next, 0.0) {
            Ok(s) => s,
            Err(_) => return LimitLabel::Unresolved,
        };
    }

    if let Some(label) = committed(params, &state, &traps, &targets) {
        return label;
    }
    if let Ok(saddle) = saddle_point(params) {
        if state.linf_dist(&saddle) < numerics::EPS_EQ {
            return LimitLabel::SaddleNeighborhood;
        }
    }
    LimitLabel::Unresolved
}

fn committed(
    params: &ModelParams,
    state: &PhaseState,
    traps: &Option<(f64, f64)>,
    targets: &[(PhaseState, LimitLabel)],
) -> Option<LimitLabel> {
    for (target, label) in targets {
        if state.linf_dist(target) < numerics::EPS_EQ {
            return Some(*label);
        }
    }
    if let ModelVariant::NoAi = params.variant {
        // Skill is non-decreasing and converges to 1 from any interior start;
        // commit once the remaining distance is curve-resolution small.
        if state.theta > 0.0 && 1.0 - state.theta < numerics::SEP_CORNER_TOL {
            return Some(LimitLabel::HighSkill);
        }
        return None;
    }
    if let Some((high_threshold, low_threshold)) = traps {
        if state.p < numerics::EPS_EQ && state.theta > *high_threshold {
            return Some(LimitLabel::HighSkill);
        }
        if state.p > 1.0 - numerics::EPS_EQ && state.theta < *low_threshold {
            return Some(LimitLabel::LowSkill);
        }
    }
    None
}

/// Discrete stochastic learner: each round delegates with probability `p`,
/// then applies the multiplicative skill and delegation updates. Only the
/// plain (simplified/general/unassisted) right-hand sides have a discrete
/// counterpart.
pub fn simulate_discrete(
    params: &ModelParams,
    init: &PhaseState,
    cfg: &DiscreteSimConfig,
) -> Result<Trajectory> {
    params.validated()?;
    match params.variant {
        ModelVariant::Simplified | ModelVariant::General | ModelVariant::NoAi => {}
        ref other => {
            return Err(CoreError::UnsupportedVariant(format!(
                "simulate_discrete is defined for Simplified/General/NoAI, got {}",
                other.name()
            )))
        }
    }
    if !init.in_unit_square() {
        return Err(CoreError::DomainError(format!(
            "initial state ({}, {}) outside the unit square",
            init.theta, init.p
        )));
    }
    cfg.validate(params)?;

    let no_ai = matches!(params.variant, ModelVariant::NoAi);
    let two_eta = 2.0 * cfg.eta;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut times = Vec::with_capacity(cfg.n_steps + 1);
    let mut states = Vec::with_capacity(cfg.n_steps + 1);
    times.push(0.0);
    states.push(*init);

    let ua = 1.0 - params.theta_a;
    let mut state = *init;
    for k in 0..cfg.n_steps {
        let delegate = !no_ai && rng.random::<f64>() < state.p;
        let theta = state.theta;
        let u = 1.0 - theta;
        let skill_term = if delegate {
            params.delta * (params.theta_d - theta)
        } else {
            u
        };
        let theta_next = theta + two_eta * theta * u * skill_term;
        let p_next = if no_ai {
            state.p
        } else {
            state.p
                + params.kappa * two_eta * state.p * (1.0 - state.p) * (u * u - ua * ua)
        };
        let t_next = (k + 1) as f64 * two_eta;
        state = clamp_checked(
            PhaseState {
                theta: theta_next,
                p: p_next,
            },
            t_next,
        )?;
        times.push(t_next);
        states.push(state);
    }

    let terminal = corner_label(params, &state).unwrap_or(LimitLabel::Unresolved);
    Ok(Trajectory {
        times,
        states,
        terminal,
    })
}

/// Advance one Euler-Maruyama step: deterministic drift for the skill, drift
/// plus `kappa*p*(1-p)*sigma*sqrt(dt)*z` for the delegation, then clamp.
/// Clamping is the faithful discretization here: the noise gate `p(1-p)`
/// vanishes on the boundary, making `p = 0` and `p = 1` absorbing.
fn sde_step(
    params: &ModelParams,
    state: &PhaseState,
    dt: f64,
    sqrt_dt: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> PhaseState {
    let v = eval_drift(params, state);
    let z: f64 = rng.sample(StandardNormal);
    let gate = params.kappa * state.p * (1.0 - state.p);
    PhaseState::clamped(
        state.theta + v.d_theta * dt,
        state.p + v.d_p * dt + gate * sigma * sqrt_dt * z,
    )
}

/// Euler-Maruyama simulation with multiplicative noise on the delegation
/// equation only.
pub fn simulate_sde(params: &ModelParams, init: &PhaseState, cfg: &SdeConfig) -> Result<Trajectory> {
    params.validated()?;
    if !init.in_unit_square() {
        return Err(CoreError::DomainError(format!(
            "initial state ({}, {}) outside the unit square",
            init.theta, init.p
        )));
    }
    cfg.validate()?;

    let n_steps = (cfg.t_end / cfg.step).round() as usize;
    let sqrt_dt = cfg.step.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(*init);

    let mut state = *init;
    for k in 0..n_steps {
        state = sde_step(params, &state, cfg.step, sqrt_dt, cfg.sigma, &mut rng);
        let t_next = (k + 1) as f64 * cfg.step;
        if !state.is_finite() {
            return Err(CoreError::NonFinite { t: t_next });
        }
        times.push(t_next);
        states.push(state);
    }

    let terminal = corner_label(params, &state).unwrap_or(LimitLabel::Unresolved);
    Ok(Trajectory {
        times,
        states,
        terminal,
    })
}

/// Final state of one noise path without recording the trajectory. Once the
/// delegation level is absorbed at 0 or 1 the path's basin is decided, so the
/// loop exits early.
pub(crate) fn sde_final_state(
    params: &ModelParams,
    init: &PhaseState,
    sigma: f64,
    step: f64,
    n_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PhaseState> {
    let sqrt_dt = step.sqrt();
    let mut state = *init;
    for k in 0..n_steps {
        if state.p == 0.0 || state.p == 1.0 {
            break;
        }
        state = sde_step(params, &state, step, sqrt_dt, sigma, rng);
        if !state.is_finite() {
            return Err(CoreError::NonFinite {
                t: (k + 1) as f64 * step,
            });
        }
    }
    Ok(state)
}

/// Antiderivative of `1 / (theta (1-theta)^2)`, the unassisted learning
/// curve's time scale: `F(theta) = ln(theta / (1-theta)) + 1 / (1-theta)`.
fn unassisted_potential(theta: f64) -> f64 {
    (theta / (1.0 - theta)).ln() + 1.0 / (1.0 - theta)
}

/// Closed-form time for the unassisted learner to grow from `theta_0` to
/// `theta_target`: `F(theta_target) - F(theta_0)` by partial fractions.
pub fn no_ai_time_to_reach(theta_0: f64, theta_target: f64) -> Result<f64> {
    if !(theta_0 > 0.0 && theta_target < 1.0 && theta_0 <= theta_target) {
        return Err(CoreError::DomainError(format!(
            "need 0 < theta_0 <= theta_target < 1, got ({theta_0}, {theta_target})"
        )));
    }
    Ok(unassisted_potential(theta_target) - unassisted_potential(theta_0))
}

/// Numerical arrival time of the unassisted flow at a target skill,
/// cross-checking [`no_ai_time_to_reach`]. Integrates with the given step and
/// refines the bracketing step with a cubic Hermite inversion, so accuracy is
/// far below the step size.
pub fn no_ai_arrival_time(theta_0: f64, theta_target: f64, step: f64) -> Result<f64> {
    if !(theta_0 > 0.0 && theta_target < 1.0 && theta_0 <= theta_target) {
        return Err(CoreError::DomainError(format!(
            "need 0 < theta_0 <= theta_target < 1, got ({theta_0}, {theta_target})"
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(CoreError::DomainError(format!("step = {step} must be positive")));
    }
    if theta_0 == theta_target {
        return Ok(0.0);
    }

    let f = |theta: f64| theta * (1.0 - theta) * (1.0 - theta);
    let rk4 = |theta: f64| {
        let k1 = f(theta);
        let k2 = f(theta + 0.5 * step * k1);
        let k3 = f(theta + 0.5 * step * k2);
        let k4 = f(theta + step * k3);
        theta + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };

    let budget = no_ai_time_to_reach(theta_0, theta_target)? * 2.0 + 10.0;
    let max_steps = (budget / step).ceil() as usize;
    let mut theta = theta_0;
    for k in 0..max_steps {
        let next = rk4(theta);
        if next >= theta_target {
            // Cubic Hermite model of theta(t) on the bracketing step, solved
            // for the crossing by bisection.
            let (d0, d1) = (f(theta), f(next));
            let hermite = |tau: f64| {
                let t2 = tau * tau;
                let t3 = t2 * tau;
                (2.0 * t3 - 3.0 * t2 + 1.0) * theta
                    + (t3 - 2.0 * t2 + tau) * step * d0
                    + (-2.0 * t3 + 3.0 * t2) * next
                    + (t3 - t2) * step * d1
            };
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid) < theta_target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok((k as f64 + 0.5 * (lo + hi)) * step);
        }
        theta = next;
    }
    Err(CoreError::Unresolved(format!(
        "target {theta_target} not reached from {theta_0} within t = {budget}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn state(theta: f64, p: f64) -> PhaseState {
        PhaseState { theta, p }
    }

    #[test]
    fn zero_delegation_stays_exactly_zero() {
        let traj = integrate_ode(&ModelParams::default(), &state(0.4, 0.0), 5.0, 1e-3).unwrap();
        assert!(traj.states.iter().all(|s| s.p == 0.0));
        assert!(traj.final_state().theta > 0.4);
    }

    #[test]
    fn trajectory_grid_is_exact() {
        let traj = integrate_ode(&ModelParams::default(), &state(0.4, 0.3), 1.0, 0.25).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(traj.len(), 5);
    }

    #[test]
    fn default_basin_examples() {
        // Just above the boundary at theta = 0.2 the learner is trapped, just
        // below it escapes.
        let params = ModelParams::default();
        assert_eq!(
            classify_limit(&params, &state(0.2, 0.1), numerics::T_MAX),
            LimitLabel::LowSkill
        );
        assert_eq!(
            classify_limit(&params, &state(0.2, 0.05), numerics::T_MAX),
            LimitLabel::HighSkill
        );
        assert_eq!(
            classify_limit(&params, &state(0.2, 0.08), numerics::T_MAX),
            LimitLabel::LowSkill
        );
        assert_eq!(
            classify_limit(&params, &state(0.2, 0.06), numerics::T_MAX),
            LimitLabel::HighSkill
        );
    }

    #[test]
    fn corner_grid_classification() {
        let params = ModelParams::default();
        assert_eq!(
            classify_limit(&params, &state(0.05, 0.05), numerics::T_MAX),
            LimitLabel::LowSkill
        );
        assert_eq!(
            classify_limit(&params, &state(0.95, 0.05), numerics::T_MAX),
            LimitLabel::HighSkill
        );
        assert_eq!(
            classify_limit(&params, &state(0.05, 0.95), numerics::T_MAX),
            LimitLabel::LowSkill
        );
        assert_eq!(
            classify_limit(&params, &state(0.95, 0.95), numerics::T_MAX),
            LimitLabel::LowSkill
        );
    }

    #[test]
    fn zero_delegation_classifies_high() {
        let params = ModelParams::default();
        assert_eq!(
            classify_limit(&params, &state(0.3, 0.0), numerics::T_MAX),
            LimitLabel::HighSkill
        );
    }

    #[test]
    fn worked_example_state_classifies_low() {
        let params = ModelParams::simplified(0.8, 1.41, 0.79);
        assert_eq!(
            classify_limit(&params, &state(0.45, 0.40), numerics::T_MAX),
            LimitLabel::LowSkill
        );
    }

    #[test]
    fn exact_saddle_reports_saddle_neighborhood() {
        let params = ModelParams::default();
        let saddle = saddle_point(&params).unwrap();
        assert_eq!(
            classify_limit(&params, &saddle, 10.0),
            LimitLabel::SaddleNeighborhood
        );
    }

    #[test]
    fn discrete_zero_delegation_matches_deterministic_recursion() {
        let params = ModelParams::default();
        let cfg = DiscreteSimConfig {
            eta: 1e-2,
            n_steps: 100,
            seed: 7,
        };
        let traj = simulate_discrete(&params, &state(0.4, 0.0), &cfg).unwrap();
        let mut theta = 0.4;
        for s in &traj.states {
            assert_abs_diff_eq!(s.theta, theta, epsilon = 1e-15);
            assert_eq!(s.p, 0.0);
            theta += 2.0 * cfg.eta * theta * (1.0 - theta) * (1.0 - theta);
        }
    }

    #[test]
    fn discrete_full_delegation_decays_monotonically() {
        let params = ModelParams::default();
        let cfg = DiscreteSimConfig {
            eta: 1e-2,
            n_steps: 200,
            seed: 3,
        };
        let traj = simulate_discrete(&params, &state(0.6, 1.0), &cfg).unwrap();
        for pair in traj.states.windows(2) {
            assert!(pair[1].theta < pair[0].theta);
            assert_eq!(pair[1].p, 1.0);
        }
    }

    #[test]
    fn discrete_time_stamps_use_two_eta() {
        let cfg = DiscreteSimConfig {
            eta: 1e-2,
            n_steps: 3,
            seed: 0,
        };
        let traj = simulate_discrete(&ModelParams::default(), &state(0.4, 0.3), &cfg).unwrap();
        assert_abs_diff_eq!(traj.times[1], 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(traj.times[3], 0.06, epsilon = 1e-15);
    }

    #[test]
    fn discrete_rejects_coarse_eta() {
        let cfg = DiscreteSimConfig {
            eta: 0.2,
            n_steps: 10,
            seed: 0,
        };
        assert!(matches!(
            simulate_discrete(&ModelParams::default(), &state(0.4, 0.3), &cfg),
            Err(CoreError::InvalidConfig(_))
        ));
    }

    #[test]
    fn discrete_is_reproducible_by_seed() {
        let params = ModelParams::default();
        let cfg = DiscreteSimConfig {
            eta: 1e-2,
            n_steps: 500,
            seed: 42,
        };
        let a = simulate_discrete(&params, &state(0.4, 0.3), &cfg).unwrap();
        let b = simulate_discrete(&params, &state(0.4, 0.3), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sde_zero_noise_tracks_ode_to_euler_accuracy() {
        let params = ModelParams::default();
        let cfg = SdeConfig {
            sigma: 0.0,
            step: 0.01,
            seed: 9,
            t_end: 5.0,
        };
        let sde = simulate_sde(&params, &state(0.4, 0.3), &cfg).unwrap();
        let ode = integrate_ode(&params, &state(0.4, 0.3), 5.0, 1e-3).unwrap();
        assert!(sde.final_state().linf_dist(&ode.final_state()) < 0.02);
    }

    #[test]
    fn sde_paths_stay_inside_and_reproduce() {
        let params = ModelParams::default();
        let cfg = SdeConfig {
            sigma: 0.1,
            step: 0.01,
            seed: 11,
            t_end: 50.0,
        };
        let a = simulate_sde(&params, &state(0.4, 0.3), &cfg).unwrap();
        assert!(a.states.iter().all(|s| s.in_unit_square()));
        let b = simulate_sde(&params, &state(0.4, 0.3), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unassisted_time_closed_form_values() {
        assert_abs_diff_eq!(
            no_ai_time_to_reach(0.4, 0.5).unwrap(),
            0.7387984414414976,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            no_ai_time_to_reach(0.4, 0.78).unwrap(),
            4.549919360227319,
            epsilon = 1e-12
        );
        assert_eq!(no_ai_time_to_reach(0.4, 0.4).unwrap(), 0.0);
        assert!(no_ai_time_to_reach(0.5, 0.4).is_err());
        assert!(no_ai_time_to_reach(0.0, 0.5).is_err());
        assert!(no_ai_time_to_reach(0.4, 1.0).is_err());
    }

    #[test]
    fn arrival_time_matches_closed_form() {
        for (a, b) in [(0.4, 0.5), (0.4, 0.78), (0.1, 0.9), (0.05, 0.95)] {
            let exact = no_ai_time_to_reach(a, b).unwrap();
            let numeric = no_ai_arrival_time(a, b, 1e-3).unwrap();
            assert_abs_diff_eq!(numeric, exact, epsilon = 1e-7);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let params = ModelParams::default();
        assert!(integrate_ode(&params, &state(0.4, 0.3), 1.0, -1e-3).is_err());
        assert!(integrate_ode(&params, &PhaseState { theta: 1.5, p: 0.0 }, 1.0, 1e-3).is_err());
        assert!(integrate_ode(&ModelParams::simplified(2.0, 3.0, 2.0), &state(0.4, 0.3), 1.0, 1e-3)
            .is_err());
    }

    #[test]
    fn state_at_interpolates() {
        let traj = integrate_ode(&ModelParams::default(), &state(0.4, 0.3), 1.0, 0.5).unwrap();
        let mid = traj.state_at(0.25);
        let expect = PhaseState {
            theta: 0.5 * (traj.states[0].theta + traj.states[1].theta),
            p: 0.5 * (traj.states[0].p + traj.states[1].p),
        };
        assert_abs_diff_eq!(mid.theta, expect.theta, epsilon = 1e-12);
        assert_abs_diff_eq!(mid.p, expect.p, epsilon = 1e-12);
    }
}
