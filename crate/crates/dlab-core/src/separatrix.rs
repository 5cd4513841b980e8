//! The basin boundary: numerically traced stable manifold of the interior
//! saddle, its piecewise-analytic approximation, basin classification, and
//! parameter sweeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::eval_drift;
use crate::equilibria::{eigen2, jacobian, saddle_point, Eigen};
use crate::error::{CoreError, Result};
use crate::model::{ModelParams, PhaseState};
use crate::numerics;
use crate::simulate::{classify_limit, sde_final_state, LimitLabel};

/// Polyline approximation of the saddle's stable manifold, a strictly
/// increasing curve from `(0, 0)` through the saddle to `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separatrix {
    pub params: ModelParams,
    pub saddle: PhaseState,
    pub nodes: Vec<PhaseState>,
}

/// Shape parameters of the three-branch closed-form boundary approximation:
/// a power law rising from the origin, the tangent line through the saddle,
/// and a mirrored power law into `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSeparatrix {
    pub theta_dagger: f64,
    pub p_dagger: f64,
    pub m_dagger: f64,
    pub beta_l: f64,
    pub beta_r: f64,
    pub theta_l: f64,
    pub theta_r: f64,
    /// Notes about clamped pasting points; not part of the export format.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl PiecewiseSeparatrix {
    /// Evaluate the three-branch curve. Both breakpoints evaluate through
    /// the adjacent power-law branch, whose pasting makes the value agree
    /// exactly with the middle line there.
    pub fn eval(&self, theta: f64) -> f64 {
        let theta = theta.clamp(0.0, 1.0);
        let middle = |t: f64| self.p_dagger + self.m_dagger * (t - self.theta_dagger);
        if theta <= self.theta_l {
            middle(self.theta_l) * (theta / self.theta_l).powf(self.beta_l)
        } else if theta < self.theta_r || self.theta_r >= 1.0 {
            middle(theta)
        } else {
            1.0 - (1.0 - middle(self.theta_r))
                * ((1.0 - theta) / (1.0 - self.theta_r)).powf(self.beta_r)
        }
    }
}

/// Deterministic basin membership relative to the separatrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasinLabel {
    High,
    Low,
    Boundary,
}

/// How a basin grid was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BasinMethod {
    Deterministic,
    Sde {
        sigma: f64,
        n_samples: usize,
        seed: u64,
        t_end: f64,
        step: f64,
    },
}

/// Cell contents of a [`BasinGrid`]: hard labels for the deterministic
/// method, high-skill convergence frequencies for the noisy one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasinCells {
    Labels(Vec<Vec<BasinLabel>>),
    Probabilities(Vec<Vec<f64>>),
}

/// Basin classification over a rectangular grid. `cells[i][j]` corresponds
/// to the initial state `(theta_axis[i], p_axis[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinGrid {
    pub theta_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub method: BasinMethod,
    pub cells: BasinCells,
}

/// Which base parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    ThetaA,
    Kappa,
    Delta,
}

impl SweepParam {
    pub fn apply(&self, base: &ModelParams, value: f64) -> ModelParams {
        let mut params = base.clone();
        match self {
            SweepParam::ThetaA => params.theta_a = value,
            SweepParam::Kappa => params.kappa = value,
            SweepParam::Delta => params.delta = value,
        }
        params
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::ThetaA => "theta_a",
            SweepParam::Kappa => "kappa",
            SweepParam::Delta => "delta",
        }
    }
}

/// Separatrix heights at probe skills, one row per swept parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub vary: SweepParam,
    pub values: Vec<f64>,
    pub probes: Vec<f64>,
    /// `psi[i][j]` = separatrix height at `probes[j]` under `values[i]`.
    pub psi: Vec<Vec<f64>>,
}

/// Trace one backward-time branch from a seed near the saddle until it
/// parks next to the expected corner. Nodes are recorded sparsely (spacing
/// [`numerics::SEP_CORNER_TOL`] in max-norm) in traced order; `dir` is +1
/// for the branch climbing to `(1, 1)` and -1 for the one descending to
/// `(0, 0)`.
fn trace_branch(
    params: &ModelParams,
    seed: PhaseState,
    target: PhaseState,
    dir: f64,
) -> Result<Vec<PhaseState>> {
    let h = numerics::ODE_STEP;
    let reversed = |s: &PhaseState| {
        let v = eval_drift(params, s);
        (-v.d_theta, -v.d_p)
    };
    let rk4 = |s: &PhaseState| {
        let (k1t, k1p) = reversed(s);
        let (k2t, k2p) = reversed(&PhaseState {
            theta: s.theta + 0.5 * h * k1t,
            p: s.p + 0.5 * h * k1p,
        });
        let (k3t, k3p) = reversed(&PhaseState {
            theta: s.theta + 0.5 * h * k2t,
            p: s.p + 0.5 * h * k2p,
        });
        let (k4t, k4p) = reversed(&PhaseState {
            theta: s.theta + h * k3t,
            p: s.p + h * k3p,
        });
        PhaseState::clamped(
            s.theta + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
            s.p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        )
    };

    let mut nodes = vec![seed];
    let mut state = seed;
    for _ in 0..numerics::SEP_MAX_STEPS {
        let next = rk4(&state);
        if !next.is_finite() {
            return Err(CoreError::ManifoldEscape(
                "backward orbit left the finite range".into(),
            ));
        }
        state = next;
        let last = *nodes.last().expect("seeded");
        if state.linf_dist(&last) >= numerics::SEP_CORNER_TOL {
            let d_theta = (state.theta - last.theta) * dir;
            let d_p = (state.p - last.p) * dir;
            if d_theta < -numerics::MONOTONE_TOL || d_p < -numerics::MONOTONE_TOL {
                return Err(CoreError::ManifoldEscape(format!(
                    "backward orbit lost monotonicity near ({}, {})",
                    state.theta, state.p
                )));
            }
            if d_theta > 0.0 && d_p > 0.0 {
                nodes.push(state);
            }
        }
        if state.linf_dist(&target) < numerics::SEP_CORNER_TOL {
            if (state.theta - nodes.last().expect("seeded").theta) * dir > 0.0 {
                nodes.push(state);
            }
            return Ok(nodes);
        }
    }
    Err(CoreError::ManifoldEscape(format!(
        "backward orbit failed to reach ({}, {}); stalled at ({}, {})",
        target.theta, target.p, state.theta, state.p
    )))
}

/// Drop nodes that do not strictly increase in both coordinates. Sorted
/// ascending input is assumed; sub-tolerance flats are removed rather than
/// reordered.
fn keep_strictly_increasing(nodes: Vec<PhaseState>) -> Vec<PhaseState> {
    let mut out: Vec<PhaseState> = Vec::with_capacity(nodes.len());
    for node in nodes {
        match out.last() {
            Some(last) if node.theta <= last.theta || node.p <= last.p => {}
            _ => out.push(node),
        }
    }
    out
}

/// Resample a polyline to `count` nodes uniformly in arc length, keeping
/// both endpoints exactly.
fn resample_polyline(nodes: &[PhaseState], count: usize) -> Vec<PhaseState> {
    debug_assert!(nodes.len() >= 2 && count >= 2);
    let mut cumulative = Vec::with_capacity(nodes.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for pair in nodes.windows(2) {
        let dt = pair[1].theta - pair[0].theta;
        let dp = pair[1].p - pair[0].p;
        total += (dt * dt + dp * dp).sqrt();
        cumulative.push(total);
    }

    let mut out = Vec::with_capacity(count);
    out.push(nodes[0]);
    let mut segment = 0;
    for j in 1..count - 1 {
        let target = total * j as f64 / (count - 1) as f64;
        while segment + 2 < cumulative.len() && cumulative[segment + 1] < target {
            segment += 1;
        }
        let span = cumulative[segment + 1] - cumulative[segment];
        let w = if span > 0.0 {
            (target - cumulative[segment]) / span
        } else {
            0.0
        };
        let (a, b) = (nodes[segment], nodes[segment + 1]);
        out.push(PhaseState {
            theta: a.theta + w * (b.theta - a.theta),
            p: a.p + w * (b.p - a.p),
        });
    }
    out.push(*nodes.last().expect("nonempty"));
    out
}

/// Compute the separatrix by backward integration from stable-eigenvector
/// seeds on both sides of the saddle, then resample to `resolution` nodes.
/// The saddle itself is kept as an exact node, and the exact corners are
/// appended as endpoints.
pub fn compute_separatrix(params: &ModelParams, resolution: usize) -> Result<Separatrix> {
    params.validated()?;
    if resolution < 3 {
        return Err(CoreError::InvalidConfig(format!(
            "resolution = {resolution} must be at least 3"
        )));
    }
    let saddle = saddle_point(params)?;
    let j = jacobian(params, &saddle);
    let Eigen::Real {
        values,
        vectors: Some(vectors),
    } = eigen2(&j)
    else {
        return Err(CoreError::DegenerateParams(
            "saddle linearization lacks real distinct eigenvalues".into(),
        ));
    };
    if !(values[1] < 0.0 && values[0] > 0.0) {
        return Err(CoreError::DegenerateParams(format!(
            "expected a hyperbolic saddle, got eigenvalues {} and {}",
            values[0], values[1]
        )));
    }
    let stable = vectors[1];

    let offset = numerics::SEP_SEED_OFFSET;
    let seed_low = PhaseState::clamped(
        saddle.theta - offset * stable[0],
        saddle.p - offset * stable[1],
    );
    let seed_high = PhaseState::clamped(
        saddle.theta + offset * stable[0],
        saddle.p + offset * stable[1],
    );
    let origin = PhaseState { theta: 0.0, p: 0.0 };
    let far = PhaseState { theta: 1.0, p: 1.0 };

    let lower = trace_branch(params, seed_low, origin, -1.0)?;
    let upper = trace_branch(params, seed_high, far, 1.0)?;

    let mut left: Vec<PhaseState> = vec![origin];
    left.extend(lower.into_iter().rev());
    let mut left = keep_strictly_increasing(left);
    while left
        .last()
        .is_some_and(|n| n.theta >= saddle.theta || n.p >= saddle.p)
    {
        left.pop();
    }
    left.push(saddle);

    let mut right: Vec<PhaseState> = vec![saddle];
    right.extend(upper);
    right.push(far);
    let right = keep_strictly_increasing(right);
    if left.len() < 2 || right.len() < 2 {
        return Err(CoreError::ManifoldEscape(
            "separatrix branches degenerated to a point".into(),
        ));
    }

    // Split the node budget by arc length so the saddle stays an exact node.
    let arc = |nodes: &[PhaseState]| {
        nodes
            .windows(2)
            .map(|w| {
                let dt = w[1].theta - w[0].theta;
                let dp = w[1].p - w[0].p;
                (dt * dt + dp * dp).sqrt()
            })
            .sum::<f64>()
    };
    let (len_l, len_r) = (arc(&left), arc(&right));
    let n_left = (((resolution - 1) as f64 * len_l / (len_l + len_r)).round() as usize)
        .clamp(1, resolution - 2)
        + 1;
    let n_right = resolution + 1 - n_left;

    let mut nodes = resample_polyline(&left, n_left);
    nodes.extend(resample_polyline(&right, n_right).into_iter().skip(1));
    let nodes = keep_strictly_increasing(nodes);

    Ok(Separatrix {
        params: params.clone(),
        saddle,
        nodes,
    })
}

/// Height of the separatrix at a skill level by monotone linear
/// interpolation on the polyline. Inputs are clamped to `[0, 1]`.
pub fn psi_eval(sep: &Separatrix, theta: f64) -> f64 {
    let t = theta.clamp(0.0, 1.0);
    let nodes = &sep.nodes;
    match nodes.binary_search_by(|n| n.theta.total_cmp(&t)) {
        Ok(i) => nodes[i].p,
        Err(0) => nodes[0].p,
        Err(i) if i >= nodes.len() => nodes[nodes.len() - 1].p,
        Err(i) => {
            let (a, b) = (nodes[i - 1], nodes[i]);
            a.p + (t - a.theta) / (b.theta - a.theta) * (b.p - a.p)
        }
    }
}

/// Closed-form three-branch approximation of the separatrix: saddle tangent
/// in the middle, smoothly pasted power laws toward both corners.
pub fn psi_approx(params: &ModelParams) -> Result<PiecewiseSeparatrix> {
    let saddle = saddle_point(params)?;
    let (theta_dagger, p_dagger) = (saddle.theta, saddle.p);
    let j = jacobian(params, &saddle);
    let disc = j.j11 * j.j11 + 4.0 * j.j12 * j.j21;
    if disc < 0.0 || j.j12 == 0.0 {
        return Err(CoreError::DegenerateParams(
            "saddle tangent slope is undefined".into(),
        ));
    }
    let m_dagger = (-j.j11 - disc.sqrt()) / (2.0 * j.j12);

    let u = 1.0 - theta_dagger;
    let beta_l = params.kappa * (1.0 - u * u);
    let beta_r = params.kappa * u * u / params.delta;
    for beta in [beta_l, beta_r] {
        if (beta - 1.0).abs() < numerics::PASTING_TOL {
            return Err(CoreError::SingularPasting(beta));
        }
    }

    let mut warnings = Vec::new();
    let theta_l_raw = beta_l * (p_dagger - m_dagger * theta_dagger) / (m_dagger * (1.0 - beta_l));
    let theta_l = if theta_l_raw > 0.0 {
        theta_dagger.min(theta_l_raw)
    } else {
        warnings.push(format!(
            "left pasting point {theta_l_raw} is not positive; clamped to the saddle"
        ));
        theta_dagger
    };

    let theta_r_raw =
        (m_dagger - beta_r * (1.0 - p_dagger + m_dagger * theta_dagger)) / ((1.0 - beta_r) * m_dagger);
    let theta_r = if theta_r_raw >= theta_dagger {
        theta_r_raw.min(1.0)
    } else {
        warnings.push(format!(
            "right pasting point {theta_r_raw} fell below the saddle; clamped to the saddle"
        ));
        theta_dagger
    };

    Ok(PiecewiseSeparatrix {
        theta_dagger,
        p_dagger,
        m_dagger,
        beta_l,
        beta_r,
        theta_l,
        theta_r,
        warnings,
    })
}

/// Deterministic basin membership of an initial state: sign of
/// `p - psi(theta)` outside a [`numerics::BOUNDARY_BAND`] strip. Inside the
/// strip the interpolation is not trusted and the label falls back to a
/// direct simulation; states that simulation cannot commit stay `Boundary`.
pub fn classify_basin(params: &ModelParams, init: &PhaseState, sep: &Separatrix) -> BasinLabel {
    let margin = init.p - psi_eval(sep, init.theta);
    if margin > numerics::BOUNDARY_BAND {
        return BasinLabel::Low;
    }
    if margin < -numerics::BOUNDARY_BAND {
        return BasinLabel::High;
    }
    match classify_limit(params, init, numerics::T_MAX) {
        LimitLabel::HighSkill => BasinLabel::High,
        LimitLabel::LowSkill => BasinLabel::Low,
        LimitLabel::SaddleNeighborhood | LimitLabel::Unresolved => BasinLabel::Boundary,
    }
}

fn sde_cell_probability(
    params: &ModelParams,
    sep: &Separatrix,
    init: &PhaseState,
    sigma: f64,
    step: f64,
    n_steps: usize,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut high = 0usize;
    for _ in 0..n_samples {
        let end = sde_final_state(params, init, sigma, step, n_steps, &mut rng)?;
        let is_high = if end.p == 0.0 {
            true
        } else if end.p == 1.0 {
            false
        } else {
            end.p < psi_eval(sep, end.theta)
        };
        if is_high {
            high += 1;
        }
    }
    Ok(high as f64 / n_samples as f64)
}

/// Classify every grid cell, either deterministically against the
/// separatrix or as a Monte Carlo high-skill convergence frequency under
/// delegation noise. Cells are independent and run in parallel.
pub fn basin_grid(
    params: &ModelParams,
    theta_axis: &[f64],
    p_axis: &[f64],
    method: &BasinMethod,
) -> Result<BasinGrid> {
    if theta_axis.is_empty() || p_axis.is_empty() {
        return Err(CoreError::EmptyData("basin grid axes must be non-empty".into()));
    }
    for &x in theta_axis.iter().chain(p_axis.iter()) {
        if !(0.0..=1.0).contains(&x) {
            return Err(CoreError::DomainError(format!(
                "grid coordinate {x} outside [0, 1]"
            )));
        }
    }
    let sep = compute_separatrix(params, numerics::SEP_RESOLUTION)?;

    let cells = match *method {
        BasinMethod::Deterministic => {
            let rows = theta_axis
                .par_iter()
                .map(|&theta| {
                    p_axis
                        .iter()
                        .map(|&p| classify_basin(params, &PhaseState { theta, p }, &sep))
                        .collect()
                })
                .collect();
            BasinCells::Labels(rows)
        }
        BasinMethod::Sde {
            sigma,
            n_samples,
            seed,
            t_end,
            step,
        } => {
            if n_samples == 0 {
                return Err(CoreError::InvalidConfig("n_samples must be positive".into()));
            }
            if !(step > 0.0 && step.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
                return Err(CoreError::InvalidConfig(format!(
                    "bad sde horizon: step = {step}, t_end = {t_end}"
                )));
            }
            let n_steps = (t_end / step).round() as usize;
            let n_p = p_axis.len();
            let rows: Result<Vec<Vec<f64>>> = theta_axis
                .par_iter()
                .enumerate()
                .map(|(i, &theta)| {
                    p_axis
                        .iter()
                        .enumerate()
                        .map(|(jv, &p)| {
                            let cell_index = (i * n_p + jv) as u64;
                            let cell_seed =
                                seed.wrapping_add(cell_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                            sde_cell_probability(
                                params,
                                &sep,
                                &PhaseState { theta, p },
                                sigma,
                                step,
                                n_steps,
                                n_samples,
                                cell_seed,
                            )
                        })
                        .collect()
                })
                .collect();
            BasinCells::Probabilities(rows?)
        }
    };

    Ok(BasinGrid {
        theta_axis: theta_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        method: *method,
        cells,
    })
}

/// Recompute the separatrix for each parameter value and tabulate its height
/// at the probe skills.
pub fn separatrix_sweep(
    base: &ModelParams,
    vary: SweepParam,
    values: &[f64],
    probes: &[f64],
) -> Result<SweepTable> {
    let psi: Result<Vec<Vec<f64>>> = values
        .par_iter()
        .map(|&value| {
            let params = vary.apply(base, value);
            let sep = compute_separatrix(&params, numerics::SEP_RESOLUTION)?;
            Ok(probes.iter().map(|&t| psi_eval(&sep, t)).collect())
        })
        .collect();
    Ok(SweepTable {
        vary,
        values: values.to_vec(),
        probes: probes.to_vec(),
        psi: psi?,
    })
}
