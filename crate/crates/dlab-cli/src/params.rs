//! Parameter resolution: reference defaults, then the config file, then
//! command-line flags on top.

use std::path::Path;

use clap::Args;
use dlab_core::{ModelParams, ModelVariant, SkillDistribution};

use crate::CliError;

/// Model parameters as optional flags, usable with every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamFlags {
    /// Assistant skill in [0, 1].
    #[arg(long, global = true)]
    pub theta_a: Option<f64>,
    /// Delegation adaptation rate.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Skill decay rate under delegation.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Default skill the learner decays toward (General variant only).
    #[arg(long, global = true)]
    pub theta_d: Option<f64>,
    /// One of: Simplified, General, NoAI, JaggedAI, MisperceivedAI,
    /// Asymmetric, DetectionPenalty.
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// Perceived assistant skill (MisperceivedAI).
    #[arg(long, global = true)]
    pub theta_tilde_a: Option<f64>,
    /// Scale on downward delegation updates (Asymmetric).
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Detection probability (DetectionPenalty).
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Comma-separated assistant skill values (JaggedAI).
    #[arg(long, global = true, value_delimiter = ',')]
    pub jagged_support: Option<Vec<f64>>,
    /// Comma-separated probabilities matching the support (JaggedAI).
    #[arg(long, global = true, value_delimiter = ',')]
    pub jagged_weights: Option<Vec<f64>>,
}

impl ParamFlags {
    /// Fill unset fields from a lower-precedence source.
    fn overlay(self, under: ParamFlags) -> ParamFlags {
        ParamFlags {
            theta_a: self.theta_a.or(under.theta_a),
            kappa: self.kappa.or(under.kappa),
            delta: self.delta.or(under.delta),
            theta_d: self.theta_d.or(under.theta_d),
            variant: self.variant.or(under.variant),
            theta_tilde_a: self.theta_tilde_a.or(under.theta_tilde_a),
            alpha: self.alpha.or(under.alpha),
            q: self.q.or(under.q),
            jagged_support: self.jagged_support.or(under.jagged_support),
            jagged_weights: self.jagged_weights.or(under.jagged_weights),
        }
    }
}

/// Merge flags over the optional config file and produce validated params.
pub fn resolve(flags: &ParamFlags, config: Option<&Path>) -> Result<ModelParams, CliError> {
    let mut merged = flags.clone();
    if let Some(path) = config {
        merged = merged.overlay(parse_config_file(path)?);
    }
    let params = build(merged)?;
    params.validated().map_err(CliError::Core)?;
    Ok(params)
}

fn build(d: ParamFlags) -> Result<ModelParams, CliError> {
    let variant_name = d.variant.as_deref().unwrap_or("Simplified");
    let need = |value: Option<f64>, key: &str| {
        value.ok_or_else(|| {
            CliError::Usage(format!("variant {variant_name} requires `{key}`"))
        })
    };
    let variant = match variant_name {
        "Simplified" => ModelVariant::Simplified,
        "General" => ModelVariant::General,
        "NoAI" => ModelVariant::NoAi,
        "JaggedAI" => {
            let support = d.jagged_support.clone().ok_or_else(|| {
                CliError::Usage("variant JaggedAI requires `jagged_support`".into())
            })?;
            let weights = d.jagged_weights.clone().ok_or_else(|| {
                CliError::Usage("variant JaggedAI requires `jagged_weights`".into())
            })?;
            ModelVariant::JaggedAi(SkillDistribution::new(support, weights)?)
        }
        "MisperceivedAI" => ModelVariant::MisperceivedAi {
            theta_tilde_a: need(d.theta_tilde_a, "theta_tilde_a")?,
        },
        "Asymmetric" => ModelVariant::Asymmetric {
            alpha: need(d.alpha, "alpha")?,
        },
        "DetectionPenalty" => ModelVariant::DetectionPenalty {
            q: need(d.q, "q")?,
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown variant `{other}` (expected Simplified, General, NoAI, JaggedAI, \
                 MisperceivedAI, Asymmetric, or DetectionPenalty)"
            )))
        }
    };
    Ok(ModelParams {
        theta_a: d.theta_a.unwrap_or(0.5),
        kappa: d.kappa.unwrap_or(3.0),
        delta: d.delta.unwrap_or(2.0),
        theta_d: d.theta_d.unwrap_or(0.0),
        variant,
    })
}

/// Flat `key = value` file with `#` comments. Keys match the flag names.
fn parse_config_file(path: &Path) -> Result<ParamFlags, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut out = ParamFlags::default();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = index + 1;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{lineno}: expected `key = value`, got `{line}`",
                path.display()
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad_number = |e: std::num::ParseFloatError| {
            CliError::Usage(format!(
                "{}:{lineno}: bad number `{value}` for `{key}`: {e}",
                path.display()
            ))
        };
        match key {
            "theta_a" => out.theta_a = Some(value.parse().map_err(bad_number)?),
            "kappa" => out.kappa = Some(value.parse().map_err(bad_number)?),
            "delta" => out.delta = Some(value.parse().map_err(bad_number)?),
            "theta_d" => out.theta_d = Some(value.parse().map_err(bad_number)?),
            "variant" => out.variant = Some(value.to_string()),
            "theta_tilde_a" => out.theta_tilde_a = Some(value.parse().map_err(bad_number)?),
            "alpha" => out.alpha = Some(value.parse().map_err(bad_number)?),
            "q" => out.q = Some(value.parse().map_err(bad_number)?),
            "jagged_support" => out.jagged_support = Some(parse_list(value, path, lineno)?),
            "jagged_weights" => out.jagged_weights = Some(parse_list(value, path, lineno)?),
            other => {
                return Err(CliError::Usage(format!(
                    "{}:{lineno}: unknown config key `{other}`",
                    path.display()
                )))
            }
        }
    }
    Ok(out)
}

fn parse_list(value: &str, path: &Path, lineno: usize) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|item| {
            item.trim().parse().map_err(|e| {
                CliError::Usage(format!(
                    "{}:{lineno}: bad list entry `{}`: {e}",
                    path.display(),
                    item.trim()
                ))
            })
        })
        .collect()
}
