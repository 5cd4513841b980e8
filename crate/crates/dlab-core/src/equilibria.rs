//! Closed-form rest points, analytic Jacobians, and 2x2 eigen-analysis.

use serde::{Deserialize, Serialize};

use crate::dynamics::{assistant_squared_loss, effective_skill, loss_comparison};
use crate::error::{CoreError, Result};
use crate::model::{ModelParams, ModelVariant, PhaseState};

/// Stability class of a rest point, decided by eigenvalue signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    StableSink,
    UnstableSource,
    Saddle,
}

/// A rest point together with its local linearization data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    #[serde(flatten)]
    pub state: PhaseState,
    pub kind: EquilibriumKind,
    /// Real eigenvalues in descending order.
    pub eigenvalues: [f64; 2],
    /// Unit eigenvectors aligned with `eigenvalues`; absent when the
    /// eigenvalues coincide.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<[[f64; 2]; 2]>,
}

/// Jacobian of the planar field, rows (skill, delegation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2 {
    pub j11: f64,
    pub j12: f64,
    pub j21: f64,
    pub j22: f64,
}

impl Jacobian2 {
    pub fn trace(&self) -> f64 {
        self.j11 + self.j22
    }

    pub fn det(&self) -> f64 {
        self.j11 * self.j22 - self.j12 * self.j21
    }
}

/// Spectrum of a 2x2 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Eigen {
    Real {
        /// Descending order.
        values: [f64; 2],
        /// Unit eigenvectors aligned with `values`; `None` for a repeated
        /// eigenvalue.
        vectors: Option<[[f64; 2]; 2]>,
    },
    /// Conjugate pair `real +- i*imag` with `imag > 0`.
    Complex { real: f64, imag: f64 },
}

/// Skill level at which the variant's delegation drift changes sign.
///
/// `None` for variants whose interior delegation nullcline is not a vertical
/// line (perception mixing) or that have no delegation dynamics at all.
fn comparison_threshold(params: &ModelParams) -> Option<f64> {
    match &params.variant {
        ModelVariant::Simplified | ModelVariant::General | ModelVariant::Asymmetric { .. } => {
            Some(params.theta_a)
        }
        ModelVariant::JaggedAi(dist) => Some(effective_skill(dist)),
        ModelVariant::DetectionPenalty { q } => {
            let ua = 1.0 - params.theta_a;
            Some(1.0 - ((1.0 - q) * ua * ua + q * ua).sqrt())
        }
        ModelVariant::MisperceivedAi { .. } | ModelVariant::NoAi => None,
    }
}

/// The interior saddle: skill pinned at the variant's comparison threshold,
/// delegation at the level that freezes skill there.
///
/// The delegation coordinate is evaluated with exactly the same expression
/// sequence as the drift bracket, which is what makes the drift at the
/// returned point vanish bit-for-bit rather than merely to rounding error.
pub fn saddle_point(params: &ModelParams) -> Result<PhaseState> {
    let theta = comparison_threshold(params).ok_or_else(|| {
        CoreError::UnsupportedVariant(format!(
            "{} has no closed-form interior saddle",
            params.variant.name()
        ))
    })?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(CoreError::DegenerateParams(format!(
            "comparison threshold {theta} must be interior to (0, 1)"
        )));
    }
    if !(params.delta > 0.0) {
        return Err(CoreError::DegenerateParams(format!(
            "delta = {} must be positive",
            params.delta
        )));
    }
    if params.theta_d >= theta {
        return Err(CoreError::DegenerateParams(format!(
            "theta_d = {} must lie below the comparison threshold {theta}",
            params.theta_d
        )));
    }
    let u = 1.0 - theta;
    let s = u + params.delta * (theta - params.theta_d);
    Ok(PhaseState { theta, p: u / s })
}

/// Analytic Jacobian of the variant's field at an arbitrary state.
pub fn jacobian(params: &ModelParams, state: &PhaseState) -> Jacobian2 {
    let PhaseState { theta, p } = *state;
    let u = 1.0 - theta;

    if let ModelVariant::NoAi = params.variant {
        return Jacobian2 {
            j11: u * (1.0 - 3.0 * theta),
            j12: 0.0,
            j21: 0.0,
            j22: 0.0,
        };
    }

    let delta = params.delta;
    let a = (1.0 - p) * u + delta * p * (params.theta_d - theta);
    let j11 = (1.0 - 2.0 * theta) * a + theta * u * (-(1.0 - p) - delta * p);
    let j12 = theta * u * (-u + delta * (params.theta_d - theta));

    let kappa = params.kappa;
    let gate_theta = -2.0 * kappa * p * (1.0 - p) * u;
    let ua = 1.0 - params.theta_a;
    let (j21, j22) = match &params.variant {
        ModelVariant::Simplified | ModelVariant::General => {
            let f = loss_comparison(theta, params.theta_a);
            (gate_theta, kappa * (1.0 - 2.0 * p) * f)
        }
        ModelVariant::JaggedAi(_) => {
            let f = u * u - assistant_squared_loss(params);
            (gate_theta, kappa * (1.0 - 2.0 * p) * f)
        }
        ModelVariant::MisperceivedAi { theta_tilde_a } => {
            let perceived = loss_comparison(theta, *theta_tilde_a);
            let actual = loss_comparison(theta, params.theta_a);
            let mixed = (1.0 - p) * perceived + p * actual;
            (
                gate_theta,
                kappa * (1.0 - 2.0 * p) * mixed
                    + kappa * p * (1.0 - p) * (actual - perceived),
            )
        }
        ModelVariant::Asymmetric { alpha } => {
            // The kink at the comparison threshold takes the gain-side
            // branch.
            let f = loss_comparison(theta, params.theta_a);
            let factor = if f >= 0.0 { 1.0 } else { *alpha };
            (factor * gate_theta, factor * kappa * (1.0 - 2.0 * p) * f)
        }
        ModelVariant::DetectionPenalty { q } => {
            let g = u * u - (1.0 - q) * ua * ua - q * ua.abs();
            (gate_theta, kappa * (1.0 - 2.0 * p) * g)
        }
        ModelVariant::NoAi => unreachable!("handled above"),
    };

    Jacobian2 { j11, j12, j21, j22 }
}

fn unit_eigenvector(j: &Jacobian2, lambda: f64) -> [f64; 2] {
    // Nonzero row of (J - lambda I) gives the orthogonal direction; use the
    // off-diagonal entries directly when available.
    let raw = if j.j12 != 0.0 {
        [j.j12, lambda - j.j11]
    } else if j.j21 != 0.0 {
        [lambda - j.j22, j.j21]
    } else if lambda == j.j11 {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let norm = (raw[0] * raw[0] + raw[1] * raw[1]).sqrt();
    let mut v = [raw[0] / norm, raw[1] / norm];
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    v
}

/// Eigenvalues and (when defined) unit eigenvectors by the quadratic formula
/// on the characteristic polynomial.
pub fn eigen2(j: &Jacobian2) -> Eigen {
    let tr = j.trace();
    let det = j.det();
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return Eigen::Complex {
            real: 0.5 * tr,
            imag: 0.5 * (-disc).sqrt(),
        };
    }
    let root = disc.sqrt();
    let hi = 0.5 * (tr + root);
    let lo = 0.5 * (tr - root);
    let vectors = if hi != lo {
        Some([unit_eigenvector(j, hi), unit_eigenvector(j, lo)])
    } else {
        None
    };
    Eigen::Real {
        values: [hi, lo],
        vectors,
    }
}

/// Sign-based stability class. A zero eigenvalue marks a center direction;
/// at the degenerate corners of this field the center direction is attracting
/// (the approach is algebraic), so the hyperbolic partner decides the class.
fn kind_from_values(values: &[f64; 2]) -> Result<EquilibriumKind> {
    let any_pos = values.iter().any(|&l| l > 0.0);
    let any_neg = values.iter().any(|&l| l < 0.0);
    match (any_pos, any_neg) {
        (true, true) => Ok(EquilibriumKind::Saddle),
        (true, false) => Ok(EquilibriumKind::UnstableSource),
        (false, true) => Ok(EquilibriumKind::StableSink),
        (false, false) => Err(CoreError::DegenerateParams(
            "both eigenvalues vanish; stability is undecidable from the linearization".into(),
        )),
    }
}

fn equilibrium_at(params: &ModelParams, state: PhaseState) -> Result<Equilibrium> {
    let j = jacobian(params, &state);
    match eigen2(&j) {
        Eigen::Real { values, vectors } => Ok(Equilibrium {
            state,
            kind: kind_from_values(&values)?,
            eigenvalues: values,
            eigenvectors: vectors,
        }),
        Eigen::Complex { real, imag } => Err(CoreError::DegenerateParams(format!(
            "complex eigenvalues {real} +- {imag}i at ({}, {})",
            state.theta, state.p
        ))),
    }
}

/// The complete rest-point set of the plain (simplified or general) field.
///
/// With no default skill this is the four corners plus the interior saddle.
/// A positive default skill moves the full-delegation sink inward to
/// `(theta_d, 1)` and turns the corner `(0, 1)` into a boundary saddle. The
/// drift at every returned state is exactly zero, not zero to tolerance.
pub fn all_equilibria(params: &ModelParams) -> Result<Vec<Equilibrium>> {
    params.validated()?;
    match params.variant {
        ModelVariant::Simplified | ModelVariant::General => {}
        ref other => {
            return Err(CoreError::UnsupportedVariant(format!(
                "all_equilibria covers the plain field only, got {}",
                other.name()
            )))
        }
    }

    let corner = |theta: f64, p: f64| PhaseState { theta, p };
    let mut points = vec![
        corner(1.0, 0.0),
        corner(params.theta_d, 1.0),
        corner(0.0, 0.0),
        corner(1.0, 1.0),
    ];
    if params.theta_d > 0.0 {
        points.push(corner(0.0, 1.0));
    }
    points.push(saddle_point(params)?);

    points
        .into_iter()
        .map(|state| equilibrium_at(params, state))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::eval_drift;
    use crate::model::SkillDistribution;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_saddle_is_exact() {
        let s = saddle_point(&ModelParams::default()).unwrap();
        assert_eq!(s.theta, 0.5);
        assert_eq!(s.p, 1.0 / 3.0);
    }

    #[test]
    fn worked_example_saddle() {
        let s = saddle_point(&ModelParams::simplified(0.8, 1.41, 0.79)).unwrap();
        assert_eq!(s.theta, 0.8);
        assert_abs_diff_eq!(s.p, 0.2404, epsilon = 5e-5);
    }

    #[test]
    fn unit_delta_collapses_denominator() {
        let s = saddle_point(&ModelParams::simplified(0.5, 3.0, 1.0)).unwrap();
        assert_eq!(s.p, 0.5);
    }

    #[test]
    fn general_saddle_with_default_skill() {
        let s = saddle_point(&ModelParams::general(0.5, 3.0, 2.0, 0.3)).unwrap();
        assert_abs_diff_eq!(s.p, 5.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn saddle_rejects_degenerate_and_unsupported() {
        assert!(matches!(
            saddle_point(&ModelParams {
                theta_a: 1.0,
                ..ModelParams::default()
            }),
            Err(CoreError::DegenerateParams(_))
        ));
        assert!(matches!(
            saddle_point(&ModelParams::default().with_variant(ModelVariant::NoAi)),
            Err(CoreError::UnsupportedVariant(_))
        ));
        assert!(matches!(
            saddle_point(
                &ModelParams::default()
                    .with_variant(ModelVariant::MisperceivedAi { theta_tilde_a: 0.9 })
            ),
            Err(CoreError::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn jagged_saddle_sits_at_effective_skill() {
        let dist = SkillDistribution::new(vec![0.6, 1.0], vec![0.5, 0.5]).unwrap();
        let eff = effective_skill(&dist);
        let params = ModelParams::default().with_variant(ModelVariant::JaggedAi(dist));
        let s = saddle_point(&params).unwrap();
        assert_eq!(s.theta, eff);
    }

    #[test]
    fn saddle_jacobian_matches_hand_derivation() {
        let params = ModelParams::default();
        let j = jacobian(&params, &saddle_point(&params).unwrap());
        assert_abs_diff_eq!(j.j11, -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j.j12, -0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(j.j21, -2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(j.j22, 0.0);
        assert_abs_diff_eq!(j.det(), -0.25, epsilon = 1e-15);
    }

    #[test]
    fn corner_jacobians_are_diagonal() {
        let params = ModelParams::default();
        let j00 = jacobian(&params, &PhaseState { theta: 0.0, p: 0.0 });
        assert_eq!((j00.j11, j00.j12, j00.j21), (1.0, 0.0, 0.0));
        assert_abs_diff_eq!(j00.j22, 3.0 * 0.75, epsilon = 1e-15);

        let j11 = jacobian(&params, &PhaseState { theta: 1.0, p: 1.0 });
        assert_eq!((j11.j12, j11.j21), (0.0, 0.0));
        assert_abs_diff_eq!(j11.j11, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j11.j22, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn saddle_eigenvalues_match_quadratic_formula() {
        let params = ModelParams::default();
        let j = jacobian(&params, &saddle_point(&params).unwrap());
        let Eigen::Real { values, vectors } = eigen2(&j) else {
            panic!("saddle spectrum must be real");
        };
        assert_abs_diff_eq!(values[0], 0.36037961002806324, epsilon = 1e-14);
        assert_abs_diff_eq!(values[1], -0.6937129433613967, epsilon = 1e-14);
        assert_abs_diff_eq!(values[0] * values[1], -0.25, epsilon = 1e-14);

        // The stable direction's slope is the separatrix tangent.
        let stable = vectors.unwrap()[1];
        assert_abs_diff_eq!(stable[1] / stable[0], 0.9610122934081686, epsilon = 1e-12);
    }

    #[test]
    fn eigen_trivial_matrices() {
        let identity = Jacobian2 {
            j11: 1.0,
            j12: 0.0,
            j21: 0.0,
            j22: 1.0,
        };
        assert_eq!(
            eigen2(&identity),
            Eigen::Real {
                values: [1.0, 1.0],
                vectors: None
            }
        );

        let diag = Jacobian2 {
            j11: 2.0,
            j12: 0.0,
            j21: 0.0,
            j22: -1.0,
        };
        let Eigen::Real { values, vectors } = eigen2(&diag) else {
            panic!("diagonal spectrum must be real");
        };
        assert_eq!(values, [2.0, -1.0]);
        assert_eq!(vectors.unwrap(), [[1.0, 0.0], [0.0, 1.0]]);

        let rotation = Jacobian2 {
            j11: 0.0,
            j12: -1.0,
            j21: 1.0,
            j22: 0.0,
        };
        assert_eq!(
            eigen2(&rotation),
            Eigen::Complex {
                real: 0.0,
                imag: 1.0
            }
        );
    }

    #[test]
    fn default_equilibrium_census() {
        let list = all_equilibria(&ModelParams::default()).unwrap();
        assert_eq!(list.len(), 5);
        let kind_of = |theta: f64, p: f64| {
            list.iter()
                .find(|e| e.state.theta == theta && e.state.p == p)
                .map(|e| e.kind)
        };
        assert_eq!(kind_of(1.0, 0.0), Some(EquilibriumKind::StableSink));
        assert_eq!(kind_of(0.0, 1.0), Some(EquilibriumKind::StableSink));
        assert_eq!(kind_of(0.0, 0.0), Some(EquilibriumKind::UnstableSource));
        assert_eq!(kind_of(1.0, 1.0), Some(EquilibriumKind::UnstableSource));
        assert_eq!(kind_of(0.5, 1.0 / 3.0), Some(EquilibriumKind::Saddle));
    }

    #[test]
    fn general_census_gains_boundary_saddle() {
        let list = all_equilibria(&ModelParams::general(0.5, 3.0, 2.0, 0.3)).unwrap();
        assert_eq!(list.len(), 6);
        let kind_of = |theta: f64, p: f64| {
            list.iter()
                .find(|e| e.state.theta == theta && e.state.p == p)
                .map(|e| e.kind)
        };
        assert_eq!(kind_of(0.3, 1.0), Some(EquilibriumKind::StableSink));
        assert_eq!(kind_of(0.0, 1.0), Some(EquilibriumKind::Saddle));
        assert_eq!(kind_of(1.0, 0.0), Some(EquilibriumKind::StableSink));
        assert_eq!(kind_of(0.0, 0.0), Some(EquilibriumKind::UnstableSource));
    }

    #[test]
    fn drift_vanishes_exactly_at_every_equilibrium() {
        let cases = [
            ModelParams::default(),
            ModelParams::simplified(0.8, 1.41, 0.79),
            ModelParams::simplified(0.37, 5.5, 0.61),
            ModelParams::general(0.5, 3.0, 2.0, 0.3),
            ModelParams::general(0.73, 0.9, 4.2, 0.111),
        ];
        for params in &cases {
            for e in all_equilibria(params).unwrap() {
                let v = eval_drift(params, &e.state);
                assert_eq!(
                    (v.d_theta, v.d_p),
                    (0.0, 0.0),
                    "nonzero drift at ({}, {}) for theta_a={}",
                    e.state.theta,
                    e.state.p,
                    params.theta_a
                );
            }
        }
    }

    #[test]
    fn saddle_kind_and_interior_position_over_grid() {
        for &theta_a in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            for &delta in &[0.5, 1.0, 2.0, 5.0] {
                for &kappa in &[0.2, 1.0, 3.0] {
                    let params = ModelParams::simplified(theta_a, kappa, delta);
                    let s = saddle_point(&params).unwrap();
                    assert!(s.p > 0.0 && s.p < 1.0);
                    let j = jacobian(&params, &s);
                    assert!(j.det() < 0.0);
                    let e = equilibrium_at(&params, s).unwrap();
                    assert_eq!(e.kind, EquilibriumKind::Saddle);
                }
            }
        }
    }

    #[test]
    fn equilibrium_json_shape() {
        let list = all_equilibria(&ModelParams::default()).unwrap();
        let json = serde_json::to_value(&list).unwrap();
        let first = &json[0];
        assert!(first.get("theta").is_some());
        assert!(first.get("p").is_some());
        assert!(first.get("kind").is_some());
        assert!(first.get("eigenvalues").is_some());
    }
}
