//! Shared domain types: parameters, variants, states, and validation.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Discrete distribution over assistant skill values.
///
/// Used by the jagged-assistant variant, where the assistant's skill is drawn
/// fresh on every task instead of being a single constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillDistribution {
    /// Skill values `s_i`, each in `[0, 1]`.
    pub support: Vec<f64>,
    /// Probabilities attached to the support, summing to 1.
    pub weights: Vec<f64>,
}

impl SkillDistribution {
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let dist = Self { support, weights };
        let issues = dist.issues();
        if issues.is_empty() {
            Ok(dist)
        } else {
            Err(CoreError::InvalidParams(issues.join("; ")))
        }
    }

    /// A deterministic assistant of skill `s` as a point mass.
    pub fn point_mass(s: f64) -> Result<Self> {
        Self::new(vec![s], vec![1.0])
    }

    /// Mean squared residual `E[(1 - s)^2]`, the quantity that replaces
    /// `(1 - theta_a)^2` everywhere the assistant's loss appears.
    pub fn mean_squared_residual(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (1.0 - s) * (1.0 - s))
            .sum()
    }

    fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.support.is_empty() {
            out.push("skill distribution has empty support".to_string());
        }
        if self.support.len() != self.weights.len() {
            out.push(format!(
                "support length {} != weights length {}",
                self.support.len(),
                self.weights.len()
            ));
        }
        if self.support.iter().any(|s| !(0.0..=1.0).contains(s)) {
            out.push("support values must lie in [0, 1]".to_string());
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            out.push("weights must be finite and nonnegative".to_string());
        }
        let total: f64 = self.weights.iter().sum();
        if !self.weights.is_empty() && (total - 1.0).abs() > 1e-12 {
            out.push(format!("weights sum to {total}, expected 1 within 1e-12"));
        }
        out
    }
}

/// Which right-hand side the model uses.
///
/// All variants share the skill equation of the simplified system (decay
/// toward `theta_d`, which is 0 except for `General`); they differ in how the
/// delegation level reacts to the loss comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Baseline coupled system with `theta_d = 0`.
    Simplified,
    /// Full system with a free default skill `theta_d`.
    General,
    /// Practice-only dynamics: delegation is frozen and skill follows the
    /// unassisted learning curve.
    #[serde(rename = "NoAI")]
    NoAi,
    /// Assistant skill is random with the given distribution; the delegation
    /// drift compares against `E[(1 - s)^2]`.
    #[serde(rename = "JaggedAI")]
    JaggedAi(SkillDistribution),
    /// The learner believes the assistant has skill `theta_tilde_a` while its
    /// true skill stays `theta_a`; the delegation drift blends the perceived
    /// and true comparisons by the current delegation level.
    #[serde(rename = "MisperceivedAI")]
    MisperceivedAi { theta_tilde_a: f64 },
    /// Downward delegation updates are scaled by `alpha` relative to upward
    /// ones; `alpha = 1` recovers the simplified system.
    Asymmetric { alpha: f64 },
    /// With probability `q` the teacher detects delegation and scores the
    /// assistant's output by `|1 - theta_a|` instead of its squared loss.
    DetectionPenalty { q: f64 },
}

impl ModelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::Simplified => "Simplified",
            ModelVariant::General => "General",
            ModelVariant::NoAi => "NoAI",
            ModelVariant::JaggedAi(_) => "JaggedAI",
            ModelVariant::MisperceivedAi { .. } => "MisperceivedAI",
            ModelVariant::Asymmetric { .. } => "Asymmetric",
            ModelVariant::DetectionPenalty { .. } => "DetectionPenalty",
        }
    }
}

/// Full parameter set of one model instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Assistant skill in `[0, 1]`.
    pub theta_a: f64,
    /// Delegation adaptation rate, nonnegative.
    pub kappa: f64,
    /// Skill decay rate under delegation, nonnegative.
    pub delta: f64,
    /// Default skill the learner decays toward; 0 for every variant except
    /// `General`.
    #[serde(default)]
    pub theta_d: f64,
    /// Right-hand-side selector.
    #[serde(default = "default_variant")]
    pub variant: ModelVariant,
}

fn default_variant() -> ModelVariant {
    ModelVariant::Simplified
}

impl Default for ModelParams {
    /// The reference setting used by most worked examples:
    /// `(theta_a, kappa, delta) = (0.5, 3, 2)`, simplified dynamics.
    fn default() -> Self {
        Self::simplified(0.5, 3.0, 2.0)
    }
}

impl ModelParams {
    /// Simplified dynamics with `theta_d = 0`.
    pub fn simplified(theta_a: f64, kappa: f64, delta: f64) -> Self {
        Self {
            theta_a,
            kappa,
            delta,
            theta_d: 0.0,
            variant: ModelVariant::Simplified,
        }
    }

    /// Full dynamics with a free default skill.
    pub fn general(theta_a: f64, kappa: f64, delta: f64, theta_d: f64) -> Self {
        Self {
            theta_a,
            kappa,
            delta,
            theta_d,
            variant: ModelVariant::General,
        }
    }

    /// Same parameters with a different variant tag.
    pub fn with_variant(mut self, variant: ModelVariant) -> Self {
        self.variant = variant;
        self
    }

    /// Same parameters with a different assistant skill.
    pub fn with_theta_a(mut self, theta_a: f64) -> Self {
        self.theta_a = theta_a;
        self
    }

    /// Report-style validation; see [`validate_params`].
    pub fn validate(&self) -> ValidationReport {
        validate_params(self)
    }

    /// Validation as a hard error, for operation entry points.
    pub fn validated(&self) -> Result<&Self> {
        self.validate().into_result()?;
        Ok(self)
    }
}

/// A point `(theta, p)` in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub theta: f64,
    pub p: f64,
}

impl PhaseState {
    /// Checked constructor; rejects coordinates outside `[0, 1]`.
    pub fn new(theta: f64, p: f64) -> Result<Self> {
        let state = Self { theta, p };
        if state.in_unit_square() {
            Ok(state)
        } else {
            Err(CoreError::DomainError(format!(
                "state ({theta}, {p}) outside the unit square"
            )))
        }
    }

    /// Constructor that clamps both coordinates into `[0, 1]`.
    pub fn clamped(theta: f64, p: f64) -> Self {
        Self {
            theta: theta.clamp(0.0, 1.0),
            p: p.clamp(0.0, 1.0),
        }
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.theta) && (0.0..=1.0).contains(&self.p)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.p.is_finite()
    }

    /// Max-norm distance to another state.
    pub fn linf_dist(&self, other: &PhaseState) -> f64 {
        (self.theta - other.theta)
            .abs()
            .max((self.p - other.p).abs())
    }
}

/// Instantaneous rates `(d theta / dt, d p / dt)` at a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub d_theta: f64,
    pub d_p: f64,
}

impl Velocity {
    pub fn is_finite(&self) -> bool {
        self.d_theta.is_finite() && self.d_p.is_finite()
    }

    /// Max-norm magnitude.
    pub fn linf(&self) -> f64 {
        self.d_theta.abs().max(self.d_p.abs())
    }
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    /// The parameters cannot be used at all.
    Error,
    /// Usable for simulation but degenerate for some analyses.
    Warning,
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub message: String,
}

/// Outcome of parameter validation: empty means fully ok.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    /// True when there are no error-severity findings (warnings allowed).
    pub fn is_ok(&self) -> bool {
        self.issues.iter().all(|i| i.severity != Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Warning)
    }

    pub fn errors(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    /// Collapse error findings into a [`CoreError::InvalidParams`].
    pub fn into_result(self) -> Result<()> {
        let errors: Vec<String> = self
            .issues
            .iter()
            .filter(|i| i.severity == Severity::Error)
            .map(|i| i.message.clone())
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CoreError::InvalidParams(errors.join("; ")))
        }
    }

    fn error(&mut self, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            severity: Severity::Error,
            message: message.into(),
        });
    }

    fn warning(&mut self, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            severity: Severity::Warning,
            message: message.into(),
        });
    }
}

/// Range and regime checks for a parameter set.
///
/// Boundary assistant skill (`theta_a` equal to 0 or 1) is only a warning:
/// simulation still works there, but the interior saddle and everything built
/// on it degenerates, so analysis entry points reject it separately.
pub fn validate_params(params: &ModelParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (name, value) in [
        ("theta_a", params.theta_a),
        ("kappa", params.kappa),
        ("delta", params.delta),
        ("theta_d", params.theta_d),
    ] {
        if !value.is_finite() {
            report.error(format!("{name} must be finite, got {value}"));
        }
    }
    if !report.is_ok() {
        return report;
    }

    if !(0.0..=1.0).contains(&params.theta_a) {
        report.error(format!("theta_a = {} outside [0, 1]", params.theta_a));
    }
    if params.kappa < 0.0 {
        report.error(format!("kappa = {} must be nonnegative", params.kappa));
    }
    if params.delta < 0.0 {
        report.error(format!("delta = {} must be nonnegative", params.delta));
    }
    if !(0.0..=1.0).contains(&params.theta_d) {
        report.error(format!("theta_d = {} outside [0, 1]", params.theta_d));
    }
    if params.theta_d > params.theta_a {
        report.error(format!(
            "regime violation: theta_d = {} exceeds theta_a = {}",
            params.theta_d, params.theta_a
        ));
    }
    if params.theta_a == 0.0 || params.theta_a == 1.0 {
        report.warning(format!(
            "boundary-degenerate: theta_a = {} admits no interior saddle",
            params.theta_a
        ));
    }

    match &params.variant {
        ModelVariant::General => {}
        ModelVariant::NoAi => {}
        other => {
            if params.theta_d != 0.0 {
                report.error(format!(
                    "variant {} requires theta_d = 0, got {}",
                    other.name(),
                    params.theta_d
                ));
            }
        }
    }
    match &params.variant {
        ModelVariant::JaggedAi(dist) => {
            for msg in dist.issues() {
                report.error(msg);
            }
        }
        ModelVariant::MisperceivedAi { theta_tilde_a } => {
            if !theta_tilde_a.is_finite() || !(0.0..=1.0).contains(theta_tilde_a) {
                report.error(format!("theta_tilde_a = {theta_tilde_a} outside [0, 1]"));
            }
        }
        ModelVariant::Asymmetric { alpha } => {
            if !alpha.is_finite() || *alpha < 0.0 {
                report.error(format!("alpha = {alpha} must be nonnegative"));
            }
        }
        ModelVariant::DetectionPenalty { q } => {
            if !q.is_finite() || !(0.0..=1.0).contains(q) {
                report.error(format!("q = {q} outside [0, 1]"));
            }
        }
        _ => {}
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_validate_clean() {
        let report = ModelParams::default().validate();
        assert!(report.is_ok());
        assert!(report.issues.is_empty());
    }

    #[test]
    fn boundary_theta_a_warns_but_passes() {
        let report = ModelParams::simplified(1.0, 3.0, 2.0).validate();
        assert!(report.is_ok());
        assert_eq!(report.warnings().count(), 1);
        assert!(report.issues[0].message.contains("boundary-degenerate"));
    }

    #[test]
    fn negative_kappa_is_an_error() {
        let report = ModelParams::simplified(0.5, -1.0, 2.0).validate();
        assert!(!report.is_ok());
        assert!(report.into_result().is_err());
    }

    #[test]
    fn regime_violation_rejected() {
        let report = ModelParams::general(0.3, 3.0, 2.0, 0.5).validate();
        assert!(!report.is_ok());
    }

    #[test]
    fn simplified_with_nonzero_theta_d_rejected() {
        let mut params = ModelParams::default();
        params.theta_d = 0.2;
        assert!(!params.validate().is_ok());
    }

    #[test]
    fn nan_rejected() {
        let report = ModelParams::simplified(f64::NAN, 3.0, 2.0).validate();
        assert!(!report.is_ok());
    }

    #[test]
    fn skill_distribution_weights_must_sum_to_one() {
        assert!(SkillDistribution::new(vec![0.5, 1.0], vec![0.5, 0.6]).is_err());
        assert!(SkillDistribution::new(vec![0.5, 1.0], vec![0.4, 0.6]).is_ok());
    }

    #[test]
    fn skill_distribution_two_point_residual() {
        // Perfect output with probability 0.96, useless output otherwise.
        let dist = SkillDistribution::new(vec![1.0, 0.0], vec![0.96, 0.04]).unwrap();
        assert!((dist.mean_squared_residual() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn phase_state_new_rejects_exterior_points() {
        assert!(PhaseState::new(1.2, 0.5).is_err());
        assert!(PhaseState::new(0.5, -0.1).is_err());
        assert!(PhaseState::new(f64::NAN, 0.5).is_err());
        assert!(PhaseState::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn phase_state_clamps() {
        let s = PhaseState::clamped(1.5, -0.25);
        assert_eq!(s.theta, 1.0);
        assert_eq!(s.p, 0.0);
    }

    #[test]
    fn variant_serde_round_trip_is_exact() {
        let params = ModelParams {
            theta_a: 0.7,
            kappa: 2.5,
            delta: 1.25,
            theta_d: 0.0,
            variant: ModelVariant::JaggedAi(
                SkillDistribution::new(vec![0.25, 0.75], vec![0.5, 0.5]).unwrap(),
            ),
        };
        let json = serde_json::to_string(&params).unwrap();
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn variant_tags_use_external_names() {
        let json = serde_json::to_string(&ModelVariant::NoAi).unwrap();
        assert_eq!(json, "\"NoAI\"");
        let json =
            serde_json::to_string(&ModelVariant::MisperceivedAi { theta_tilde_a: 0.9 }).unwrap();
        assert!(json.contains("MisperceivedAI"));
    }

    #[test]
    fn misperceived_range_checked() {
        let params = ModelParams::default()
            .with_variant(ModelVariant::MisperceivedAi { theta_tilde_a: 1.5 });
        assert!(!params.validate().is_ok());
    }
}
