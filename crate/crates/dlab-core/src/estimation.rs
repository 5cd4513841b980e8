//! Parameter recovery from longitudinal session logs and basin prediction
//! for the estimated model.
//!
//! Skill is never observed directly; it is recovered from the learner's own
//! squared loss as `theta = 1 - sqrt(ell)`. All rate estimators work on the
//! per-session scale: the `eta` they report is the coefficient of
//! `theta(1-theta)^2` in one manual session's skill change.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{ModelParams, PhaseState};
use crate::numerics;
use crate::separatrix::{psi_approx, BasinLabel};

/// One logged session: what was decided, what it cost, and the delegation
/// level going in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    /// 1-based session index; records must be consecutive in `t`.
    pub t: u64,
    /// Delegation indicator: `true` when the assistant produced the output.
    pub x: bool,
    /// Learner's own squared loss, observed only on manual sessions.
    pub ell: Option<f64>,
    /// Assistant's squared loss on the same task, when evaluated.
    pub ell_a: Option<f64>,
    /// Delegation level at the start of the session.
    pub p: f64,
}

impl SessionRecord {
    fn check(&self) -> Result<()> {
        if self.x != self.ell.is_none() {
            return Err(CoreError::InvalidConfig(format!(
                "session {}: own loss must be present exactly on manual sessions",
                self.t
            )));
        }
        for loss in [self.ell, self.ell_a].into_iter().flatten() {
            if !(0.0..=1.0).contains(&loss) {
                return Err(CoreError::InvalidConfig(format!(
                    "session {}: loss {loss} outside [0, 1]",
                    self.t
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(CoreError::InvalidConfig(format!(
                "session {}: delegation level {} outside [0, 1]",
                self.t, self.p
            )));
        }
        Ok(())
    }

    fn theta(&self) -> Option<f64> {
        self.ell.map(|l| 1.0 - l.sqrt())
    }
}

/// Point estimates of the four model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedParams {
    pub theta_a: f64,
    pub eta: f64,
    pub kappa: f64,
    pub delta: f64,
}

/// How many samples entered each estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub theta_a: usize,
    pub eta: usize,
    pub kappa: usize,
    pub delta: usize,
}

/// Basin prediction for the current state under the estimated model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: BasinLabel,
    /// Approximate separatrix height at the current skill.
    pub threshold: f64,
    /// `p - threshold`; positive means inside the low-skill basin.
    pub margin: f64,
}

/// Full estimation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub estimates: EstimatedParams,
    pub sample_counts: SampleCounts,
    /// Samples dropped across all estimators because a denominator was
    /// numerically zero.
    pub excluded_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<Prediction>,
}

/// Estimation switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimationOptions {
    /// Use the literal mean of `(1 - ell_a)^2` inside the assistant-skill
    /// square root instead of the mean loss. See [`estimate_theta_a`].
    pub literal_theta_a: bool,
}

fn checked(records: &[SessionRecord]) -> Result<&[SessionRecord]> {
    if records.is_empty() {
        return Err(CoreError::EmptyData("no session records".into()));
    }
    for r in records {
        r.check()?;
    }
    for pair in records.windows(2) {
        if pair[1].t != pair[0].t + 1 {
            return Err(CoreError::InvalidConfig(format!(
                "session indices must be consecutive, got {} after {}",
                pair[1].t, pair[0].t
            )));
        }
    }
    Ok(records)
}

fn theta_a_from_mean(records: &[SessionRecord], literal: bool) -> Result<(f64, usize)> {
    let losses: Vec<f64> = records.iter().filter_map(|r| r.ell_a).collect();
    if losses.is_empty() {
        return Err(CoreError::EmptyData(
            "no sessions with an observed assistant loss".into(),
        ));
    }
    let mean = if literal {
        losses.iter().map(|l| (1.0 - l) * (1.0 - l)).sum::<f64>() / losses.len() as f64
    } else {
        losses.iter().sum::<f64>() / losses.len() as f64
    };
    Ok((1.0 - mean.sqrt(), losses.len()))
}

/// Assistant skill from the mean observed assistant loss,
/// `1 - sqrt(mean ell_a)`: the deterministic skill with the same expected
/// squared loss. (A literal variant that averages `(1 - ell_a)^2` instead is
/// available through [`EstimationOptions`]; it is not consistent with the
/// loss model and exists only for comparison.)
pub fn estimate_theta_a(records: &[SessionRecord]) -> Result<f64> {
    Ok(theta_a_from_mean(checked(records)?, false)?.0)
}

/// Consecutive manual session pairs, the averaging set for the learning
/// rate.
fn manual_pairs(records: &[SessionRecord]) -> Vec<(usize, usize)> {
    records
        .windows(2)
        .enumerate()
        .filter(|(_, w)| !w[0].x && !w[1].x)
        .map(|(i, _)| (i, i + 1))
        .collect()
}

fn eta_detail(records: &[SessionRecord]) -> Result<(f64, usize, usize)> {
    let pairs = manual_pairs(records);
    if pairs.is_empty() {
        return Err(CoreError::EmptyData(
            "no consecutive manual session pairs".into(),
        ));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (i, j) in pairs {
        let theta = records[i].theta().expect("manual row");
        let theta_next = records[j].theta().expect("manual row");
        let denom = theta * (1.0 - theta) * (1.0 - theta);
        if denom.abs() < numerics::ESTIMATION_EXCLUSION_TOL {
            excluded += 1;
            continue;
        }
        sum += (theta_next - theta) / denom;
        used += 1;
    }
    if used == 0 {
        return Err(CoreError::Degenerate(
            "every consecutive manual pair had a vanishing denominator".into(),
        ));
    }
    Ok((sum / used as f64, used, excluded))
}

/// Per-session learning rate from consecutive manual pairs: observed skill
/// change divided by the predicted shape `theta(1-theta)^2`, averaged.
pub fn estimate_eta(records: &[SessionRecord]) -> Result<f64> {
    Ok(eta_detail(checked(records)?)?.0)
}

fn kappa_detail(records: &[SessionRecord], eta: f64) -> Result<(f64, usize, usize)> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(CoreError::DomainError(format!(
            "eta = {eta} must be positive"
        )));
    }
    let pairs = manual_pairs(records);
    if pairs.is_empty() {
        return Err(CoreError::EmptyData(
            "no consecutive manual session pairs".into(),
        ));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (i, j) in pairs {
        let r = &records[i];
        let (Some(ell), Some(ell_a)) = (r.ell, r.ell_a) else {
            excluded += 1;
            continue;
        };
        let gate = r.p * (1.0 - r.p);
        let advantage = ell - ell_a;
        if gate < numerics::ESTIMATION_EXCLUSION_TOL
            || advantage.abs() < numerics::ESTIMATION_EXCLUSION_TOL
        {
            excluded += 1;
            continue;
        }
        sum += (records[j].p - r.p) / (eta * gate * advantage);
        used += 1;
    }
    if used == 0 {
        return Err(CoreError::EmptyData(
            "every delegation step was excluded as degenerate".into(),
        ));
    }
    Ok((sum / used as f64, used, excluded))
}

/// Delegation-adaptation rate from the observed delegation change over
/// consecutive manual pairs, given the learning rate. Steps with a vanishing
/// `p(1-p)` gate or loss advantage are excluded and counted.
pub fn estimate_kappa(records: &[SessionRecord], eta: f64) -> Result<f64> {
    Ok(kappa_detail(checked(records)?, eta)?.0)
}

fn delta_detail(records: &[SessionRecord], eta: f64) -> Result<(f64, usize, usize)> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(CoreError::DomainError(format!(
            "eta = {eta} must be positive"
        )));
    }
    let manual: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.x)
        .map(|(i, _)| i)
        .collect();
    let gapped: Vec<(usize, usize)> = manual
        .windows(2)
        .filter(|w| w[1] - w[0] >= 2)
        .map(|w| (w[0], w[1]))
        .collect();
    if gapped.is_empty() {
        return Err(CoreError::EmptyData(
            "no manual pairs separated by delegated sessions".into(),
        ));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (i, j) in gapped {
        let theta = records[i].theta().expect("manual row");
        let theta_next = records[j].theta().expect("manual row");
        let gap_len = (j - i - 1) as f64;
        let growth = eta * theta * (1.0 - theta) * (1.0 - theta);
        let denom = eta * theta * (1.0 - theta) * gap_len * theta;
        if denom.abs() < numerics::ESTIMATION_EXCLUSION_TOL {
            excluded += 1;
            continue;
        }
        sum += (growth - (theta_next - theta)) / denom;
        used += 1;
    }
    if used == 0 {
        return Err(CoreError::Degenerate(
            "every gapped manual pair had a vanishing denominator".into(),
        ));
    }
    Ok((sum / used as f64, used, excluded))
}

/// Skill-decay rate from manual pairs separated by delegated sessions: the
/// shortfall of observed growth below one manual session's first-order
/// prediction, attributed equally to each intervening delegated session.
pub fn estimate_delta(records: &[SessionRecord], eta: f64) -> Result<f64> {
    Ok(delta_detail(checked(records)?, eta)?.0)
}

/// Current state implied by the log: skill from the last manual session's
/// loss, delegation from the last record.
pub fn default_current_state(records: &[SessionRecord]) -> Option<PhaseState> {
    let theta = records.iter().rev().find_map(|r| r.theta())?;
    let p = records.last()?.p;
    Some(PhaseState { theta, p })
}

/// Basin prediction: compare the current delegation level against the
/// approximate separatrix height of the estimated model at the current
/// skill.
pub fn predict_outcome(est: &EstimatedParams, current: &PhaseState) -> Result<Prediction> {
    let params = ModelParams::simplified(est.theta_a, est.kappa, est.delta);
    params.validated()?;
    let pw = psi_approx(&params)?;
    let threshold = pw.eval(current.theta);
    let margin = current.p - threshold;
    let label = if margin > 0.0 {
        BasinLabel::Low
    } else {
        BasinLabel::High
    };
    Ok(Prediction {
        label,
        threshold,
        margin,
    })
}

/// Run the whole pipeline: all four estimators plus, when a current state is
/// available, the basin prediction.
pub fn estimate_all(
    records: &[SessionRecord],
    current: Option<PhaseState>,
    options: &EstimationOptions,
) -> Result<EstimationReport> {
    let records = checked(records)?;
    let (theta_a, n_theta_a) = theta_a_from_mean(records, options.literal_theta_a)?;
    let (eta, n_eta, excl_eta) = eta_detail(records)?;
    let (kappa, n_kappa, excl_kappa) = kappa_detail(records, eta)?;
    let (delta, n_delta, excl_delta) = delta_detail(records, eta)?;
    let estimates = EstimatedParams {
        theta_a,
        eta,
        kappa,
        delta,
    };
    let prediction = match current.or_else(|| default_current_state(records)) {
        Some(state) => Some(predict_outcome(&estimates, &state)?),
        None => None,
    };
    Ok(EstimationReport {
        estimates,
        sample_counts: SampleCounts {
            theta_a: n_theta_a,
            eta: n_eta,
            kappa: n_kappa,
            delta: n_delta,
        },
        excluded_steps: excl_eta + excl_kappa + excl_delta,
        prediction,
    })
}
