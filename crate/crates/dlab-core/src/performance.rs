//! Instantaneous-loss comparison between an assisted learner and the
//! unassisted baseline: gap series, crossing times, and crossing curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{eval_drift, loss};
use crate::error::{CoreError, Result};
use crate::model::{ModelParams, ModelVariant, PhaseState};
use crate::numerics;
use crate::simulate::{integrate_ode, no_ai_time_to_reach, Trajectory};

/// Loss difference `assisted - unassisted` sampled on a shared time grid,
/// together with the two trajectories it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSeries {
    pub times: Vec<f64>,
    pub gap: Vec<f64>,
    pub assisted: Trajectory,
    pub baseline: Trajectory,
}

/// Location of the last sign change of the gap, after which the assisted
/// learner is permanently behind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingResult {
    pub t_c: f64,
    /// Analytic cap: the time the unassisted learner needs to reach the
    /// assistant's skill. The crossing cannot happen later.
    pub t_star: f64,
    pub sign_changes: usize,
    pub bracket: (f64, f64),
}

fn check_gap_inputs(params: &ModelParams, init: &PhaseState) -> Result<()> {
    params.validated()?;
    if params.theta_d != 0.0 {
        return Err(CoreError::UnsupportedVariant(
            "loss-gap analysis compares against the unassisted baseline and needs theta_d = 0"
                .into(),
        ));
    }
    if !init.in_unit_square() || init.theta <= 0.0 || init.theta >= 1.0 {
        return Err(CoreError::DomainError(format!(
            "initial state ({}, {}) must have interior skill",
            init.theta, init.p
        )));
    }
    Ok(())
}

fn baseline_params(params: &ModelParams) -> ModelParams {
    params.clone().with_variant(ModelVariant::NoAi)
}

/// Integrate the assisted system and the unassisted baseline from the same
/// starting skill and report their loss difference per grid point.
pub fn performance_gap(
    params: &ModelParams,
    init: &PhaseState,
    t_end: f64,
    step: f64,
) -> Result<GapSeries> {
    check_gap_inputs(params, init)?;
    let assisted = integrate_ode(params, init, t_end, step)?;
    let baseline = integrate_ode(
        &baseline_params(params),
        &PhaseState {
            theta: init.theta,
            p: 0.0,
        },
        t_end,
        step,
    )?;
    let gap = assisted
        .states
        .iter()
        .zip(baseline.states.iter())
        .map(|(a, b)| {
            let u = 1.0 - b.theta;
            loss(a.theta, a.p, params) - u * u
        })
        .collect();
    Ok(GapSeries {
        times: assisted.times.clone(),
        gap,
        assisted,
        baseline,
    })
}

/// One RK4 step of the assisted/baseline pair, used both on the scan grid
/// and for the partial steps inside bisection.
fn advance_pair(
    params: &ModelParams,
    base: &ModelParams,
    pair: (PhaseState, PhaseState),
    h: f64,
) -> (PhaseState, PhaseState) {
    let step_one = |p: &ModelParams, s: &PhaseState| {
        let at = |theta: f64, pp: f64| eval_drift(p, &PhaseState { theta, p: pp });
        let k1 = eval_drift(p, s);
        let k2 = at(s.theta + 0.5 * h * k1.d_theta, s.p + 0.5 * h * k1.d_p);
        let k3 = at(s.theta + 0.5 * h * k2.d_theta, s.p + 0.5 * h * k2.d_p);
        let k4 = at(s.theta + h * k3.d_theta, s.p + h * k3.d_p);
        PhaseState::clamped(
            s.theta + h / 6.0 * (k1.d_theta + 2.0 * k2.d_theta + 2.0 * k3.d_theta + k4.d_theta),
            s.p + h / 6.0 * (k1.d_p + 2.0 * k2.d_p + 2.0 * k3.d_p + k4.d_p),
        )
    };
    (step_one(params, &pair.0), step_one(base, &pair.1))
}

fn gap_of(params: &ModelParams, pair: (PhaseState, PhaseState)) -> f64 {
    let u = 1.0 - pair.1.theta;
    loss(pair.0.theta, pair.0.p, params) - u * u
}

fn crossing_time_with_step(
    params: &ModelParams,
    init: &PhaseState,
    t_max: f64,
    scan: f64,
) -> Result<CrossingResult> {
    check_gap_inputs(params, init)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(CoreError::DomainError(format!(
            "t_max = {t_max} must be positive"
        )));
    }
    if init.theta >= params.theta_a {
        // Already at least as skilled as the assistant: the gap never dips
        // below zero.
        return Ok(CrossingResult {
            t_c: 0.0,
            t_star: 0.0,
            sign_changes: 0,
            bracket: (0.0, 0.0),
        });
    }

    let t_star = no_ai_time_to_reach(init.theta, params.theta_a)?;
    let horizon = t_max.min(2.0 * t_star + 10.0);
    let n = (horizon / scan).ceil() as usize;
    let base = baseline_params(params);

    let mut pairs = Vec::with_capacity(n + 1);
    pairs.push((
        *init,
        PhaseState {
            theta: init.theta,
            p: 0.0,
        },
    ));
    for k in 0..n {
        let next = advance_pair(params, &base, pairs[k], scan);
        if !next.0.is_finite() || !next.1.is_finite() {
            return Err(CoreError::NonFinite {
                t: (k + 1) as f64 * scan,
            });
        }
        pairs.push(next);
    }
    let gaps: Vec<f64> = pairs.iter().map(|&pair| gap_of(params, pair)).collect();

    let mut sign_changes = 0usize;
    let mut last_sign = 0.0f64;
    let mut last_change: Option<(usize, usize)> = None;
    let mut last_nonzero = 0usize;
    for (k, &g) in gaps.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let sign = g.signum();
        if last_sign != 0.0 && sign != last_sign {
            sign_changes += 1;
            last_change = Some((last_nonzero, k));
        }
        last_sign = sign;
        last_nonzero = k;
    }

    if last_sign == 0.0 {
        // Identically zero gap (no delegation at all).
        return Ok(CrossingResult {
            t_c: 0.0,
            t_star,
            sign_changes: 0,
            bracket: (0.0, 0.0),
        });
    }
    if last_sign < 0.0 {
        return Err(CoreError::Unresolved(format!(
            "gap still nonpositive at t = {horizon}; increase t_max"
        )));
    }

    let Some((lo_idx, hi_idx)) = last_change else {
        // Positive from the first sample on.
        return Ok(CrossingResult {
            t_c: 0.0,
            t_star,
            sign_changes: 0,
            bracket: (0.0, 0.0),
        });
    };

    // Bisect inside the bracketing scan interval, restarting each probe from
    // the stored state at the left endpoint.
    let start = pairs[lo_idx];
    let sign_lo = gaps[lo_idx].signum();
    let gap_at_offset = |dt: f64| {
        let mut pair = start;
        let mut remaining = dt;
        while remaining > scan {
            pair = advance_pair(params, &base, pair, scan);
            remaining -= scan;
        }
        if remaining > 0.0 {
            pair = advance_pair(params, &base, pair, remaining);
        }
        gap_of(params, pair)
    };
    let (mut lo, mut hi) = (0.0f64, (hi_idx - lo_idx) as f64 * scan);
    while hi - lo > numerics::BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if gap_at_offset(mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_lo = lo_idx as f64 * scan + lo;
    let t_hi = lo_idx as f64 * scan + hi;
    Ok(CrossingResult {
        t_c: 0.5 * (t_lo + t_hi),
        t_star,
        sign_changes,
        bracket: (t_lo, t_hi),
    })
}

/// Time of the last sign change of the loss gap: after `t_c` the assisted
/// learner's instantaneous loss stays above the baseline's. Located by a
/// grid scan for sign changes followed by bisection; the scan horizon is
/// capped by the analytic bound `2*t_star + 10`.
pub fn crossing_time(
    params: &ModelParams,
    init: &PhaseState,
    t_max: f64,
) -> Result<CrossingResult> {
    crossing_time_with_step(params, init, t_max, numerics::SCAN_STEP)
}

/// Crossing time as a function of the assistant's skill, holding everything
/// else fixed. Points are independent and run in parallel.
pub fn crossing_curve(
    params: &ModelParams,
    init: &PhaseState,
    theta_a_values: &[f64],
    t_max: f64,
) -> Result<Vec<(f64, CrossingResult)>> {
    theta_a_values
        .par_iter()
        .map(|&theta_a| {
            if !(theta_a > 0.0 && theta_a < 1.0) {
                return Err(CoreError::InvalidParams(format!(
                    "swept theta_a = {theta_a} outside (0, 1)"
                )));
            }
            let swept = params.clone().with_theta_a(theta_a);
            Ok((theta_a, crossing_time(&swept, init, t_max)?))
        })
        .collect()
}
