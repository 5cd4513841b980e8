//! One function per subcommand. Each returns the resolved configuration,
//! the seeds it consumed, and the artifact files it wrote.

use std::path::Path;

use dlab_core::estimation::{EstimationOptions, SessionRecord};
use dlab_core::separatrix::{BasinMethod, SweepParam};
use dlab_core::simulate::{DiscreteSimConfig, SdeConfig};
use dlab_core::{ModelParams, PhaseState};
use rayon::prelude::*;
use serde_json::json;

use crate::artifacts::{self, OutDir};
use crate::{
    BasinArgs, BasinMethodArg, CliError, CrossingArgs, CrossingCurveArgs, EstimateArgs, GapArgs,
    SeparatrixArgs, SimMode, SimulateArgs, SweepArgs, SweepOpArg,
};

/// What a subcommand produced, for the manifest.
pub struct Outcome {
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    /// Sweep points that errored; non-zero turns into a failing exit code
    /// after the manifest is written.
    pub failures: usize,
}

impl Outcome {
    fn new(config: serde_json::Value) -> Self {
        Self {
            config,
            seeds: Vec::new(),
            outputs: Vec::new(),
            failures: 0,
        }
    }
}

fn evenly_spaced(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Comma-separated float list; empty input means an empty list.
pub fn parse_value_list(raw: &str) -> Result<Vec<f64>, CliError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad value `{item}`: {e}")))
        })
        .collect()
}

pub fn simulate(
    params: &ModelParams,
    args: &SimulateArgs,
    out: &OutDir,
) -> Result<Outcome, CliError> {
    let init = PhaseState::new(args.theta0, args.p0)?;
    let (traj, seeds) = match args.mode {
        SimMode::Ode => {
            let traj = dlab_core::simulate::integrate_ode(params, &init, args.t_end, args.step)?;
            (traj, Vec::new())
        }
        SimMode::Discrete => {
            let cfg = DiscreteSimConfig {
                eta: args.eta,
                n_steps: args.n_steps,
                seed: args.seed,
            };
            let traj = dlab_core::simulate::simulate_discrete(params, &init, &cfg)?;
            (traj, vec![args.seed])
        }
        SimMode::Sde => {
            let cfg = SdeConfig {
                sigma: args.sigma,
                step: args.step,
                seed: args.seed,
                t_end: args.t_end,
            };
            let traj = dlab_core::simulate::simulate_sde(params, &init, &cfg)?;
            (traj, vec![args.seed])
        }
    };
    let config = json!({
        "params": params,
        "theta0": args.theta0,
        "p0": args.p0,
        "mode": args.mode.name(),
        "t_end": args.t_end,
        "step": args.step,
        "eta": args.eta,
        "n_steps": args.n_steps,
        "sigma": args.sigma,
        "seed": args.seed,
    });
    out.write_text("trajectory.csv", &artifacts::trajectory_csv(&traj))?;
    out.write_json(
        "trajectory.json",
        &json!({ "terminal": traj.terminal, "config": config }),
    )?;
    let mut outcome = Outcome::new(config);
    outcome.seeds = seeds;
    outcome.outputs = vec!["trajectory.csv".into(), "trajectory.json".into()];
    Ok(outcome)
}

pub fn equilibria(params: &ModelParams, out: &OutDir) -> Result<Outcome, CliError> {
    let list = dlab_core::equilibria::all_equilibria(params)?;
    out.write_json("equilibria.json", &list)?;
    let mut outcome = Outcome::new(json!({ "params": params }));
    outcome.outputs = vec!["equilibria.json".into()];
    Ok(outcome)
}

pub fn separatrix(
    params: &ModelParams,
    args: &SeparatrixArgs,
    out: &OutDir,
) -> Result<Outcome, CliError> {
    let sep = dlab_core::separatrix::compute_separatrix(params, args.resolution)?;
    let approx = dlab_core::separatrix::psi_approx(params)?;
    for warning in &approx.warnings {
        eprintln!("warning: {warning}");
    }
    out.write_text("separatrix.csv", &artifacts::separatrix_csv(&sep))?;
    out.write_json("psi_tilde.json", &approx)?;
    let mut outcome = Outcome::new(json!({
        "params": params,
        "resolution": args.resolution,
    }));
    outcome.outputs = vec!["separatrix.csv".into(), "psi_tilde.json".into()];
    Ok(outcome)
}

pub fn basin(params: &ModelParams, args: &BasinArgs, out: &OutDir) -> Result<Outcome, CliError> {
    if args.grid < 2 {
        return Err(CliError::Usage(format!(
            "--grid {} must be at least 2",
            args.grid
        )));
    }
    let axis = evenly_spaced(args.grid);
    let method = match args.method {
        BasinMethodArg::Deterministic => BasinMethod::Deterministic,
        BasinMethodArg::Sde => BasinMethod::Sde {
            sigma: args.sigma,
            n_samples: args.samples,
            seed: args.seed,
            t_end: args.t_end,
            step: args.step,
        },
    };
    let grid = dlab_core::separatrix::basin_grid(params, &axis, &axis, &method)?;
    let seeds = match args.method {
        BasinMethodArg::Deterministic => Vec::new(),
        BasinMethodArg::Sde => vec![args.seed],
    };
    out.write_text("basin.csv", &artifacts::basin_matrix_csv(&grid))?;
    out.write_json(
        "basin.json",
        &json!({
            "theta_axis": grid.theta_axis,
            "p_axis": grid.p_axis,
            "method": grid.method,
            "seed": seeds.first(),
        }),
    )?;
    let config = json!({
        "params": params,
        "grid": args.grid,
        "method": method,
    });
    let mut outcome = Outcome::new(config);
    outcome.seeds = seeds;
    outcome.outputs = vec!["basin.csv".into(), "basin.json".into()];
    Ok(outcome)
}

pub fn gap(params: &ModelParams, args: &GapArgs, out: &OutDir) -> Result<Outcome, CliError> {
    let init = PhaseState::new(args.theta0, args.p0)?;
    let series = dlab_core::performance::performance_gap(params, &init, args.t_end, args.step)?;
    out.write_text("gap.csv", &artifacts::gap_csv(&series))?;
    let mut outcome = Outcome::new(json!({
        "params": params,
        "theta0": args.theta0,
        "p0": args.p0,
        "t_end": args.t_end,
        "step": args.step,
    }));
    outcome.outputs = vec!["gap.csv".into()];
    Ok(outcome)
}

pub fn crossing(
    params: &ModelParams,
    args: &CrossingArgs,
    out: &OutDir,
) -> Result<Outcome, CliError> {
    let init = PhaseState::new(args.theta0, args.p0)?;
    let result = dlab_core::performance::crossing_time(params, &init, args.t_max)?;
    out.write_json("crossing.json", &result)?;
    let mut outcome = Outcome::new(json!({
        "params": params,
        "theta0": args.theta0,
        "p0": args.p0,
        "t_max": args.t_max,
    }));
    outcome.outputs = vec!["crossing.json".into()];
    Ok(outcome)
}

pub fn crossing_curve(
    params: &ModelParams,
    args: &CrossingCurveArgs,
    out: &OutDir,
) -> Result<Outcome, CliError> {
    let values = parse_value_list(&args.values)?;
    let init = PhaseState::new(args.theta0, args.p0)?;
    let rows = dlab_core::performance::crossing_curve(params, &init, &values, args.t_max)?;
    let mut csv = String::from("theta_a,t_c,t_star,sign_changes,bracket_lo,bracket_hi\n");
    for (theta_a, result) in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            artifacts::sig12(*theta_a),
            artifacts::sig12(result.t_c),
            artifacts::sig12(result.t_star),
            result.sign_changes,
            artifacts::sig12(result.bracket.0),
            artifacts::sig12(result.bracket.1),
        ));
    }
    out.write_text("crossing_curve.csv", &csv)?;
    let mut outcome = Outcome::new(json!({
        "params": params,
        "values": values,
        "theta0": args.theta0,
        "p0": args.p0,
        "t_max": args.t_max,
    }));
    outcome.outputs = vec!["crossing_curve.csv".into()];
    Ok(outcome)
}

pub fn estimate(args: &EstimateArgs, out: &OutDir) -> Result<Outcome, CliError> {
    let records = read_sessions(&args.input)?;
    let current = match (args.theta0, args.p0) {
        (Some(theta), Some(p)) => Some(PhaseState::new(theta, p)?),
        (None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "--theta0 and --p0 must be given together".into(),
            ))
        }
    };
    let options = EstimationOptions {
        literal_theta_a: args.literal_theta_a,
    };
    let report = dlab_core::estimation::estimate_all(&records, current, &options)?;
    out.write_json("estimate.json", &report)?;
    let mut outcome = Outcome::new(json!({
        "input": args.input.display().to_string(),
        "sessions": records.len(),
        "literal_theta_a": args.literal_theta_a,
        "current": current,
    }));
    outcome.outputs = vec!["estimate.json".into()];
    Ok(outcome)
}

/// Session log CSV: header `t,decision,x,ell,ell_a,p`; `---` or an empty
/// field mark unobserved losses.
fn read_sessions(path: &Path) -> Result<Vec<SessionRecord>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let expected = ["t", "decision", "x", "ell", "ell_a", "p"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Data(format!(
            "{}: expected header `{}`, got `{}`",
            path.display(),
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(","),
        )));
    }
    let mut records = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let lineno = index + 2;
        let row = row.map_err(|e| CliError::Data(format!("{}:{lineno}: {e}", path.display())))?;
        if row.len() != expected.len() {
            return Err(CliError::Data(format!(
                "{}:{lineno}: expected {} fields, got {}",
                path.display(),
                expected.len(),
                row.len()
            )));
        }
        let field_err = |what: &str, value: &str, detail: String| {
            CliError::Data(format!(
                "{}:{lineno}: bad {what} `{value}`: {detail}",
                path.display()
            ))
        };
        let t: u64 = row[0]
            .parse()
            .map_err(|e| field_err("t", &row[0], format!("{e}")))?;
        let x = match &row[2] {
            "0" => false,
            "1" => true,
            other => return Err(field_err("x", other, "expected 0 or 1".into())),
        };
        match (&row[1], x) {
            ("Manual", false) | ("Delegate", true) | ("", _) => {}
            (decision, _) => {
                return Err(field_err(
                    "decision",
                    decision,
                    format!("does not match x = {}", &row[2]),
                ))
            }
        }
        let parse_opt = |what: &str, value: &str| -> Result<Option<f64>, CliError> {
            if value.is_empty() || value == "---" {
                return Ok(None);
            }
            value
                .parse()
                .map(Some)
                .map_err(|e| field_err(what, value, format!("{e}")))
        };
        let ell = parse_opt("ell", &row[3])?;
        let ell_a = parse_opt("ell_a", &row[4])?;
        let p: f64 = row[5]
            .parse()
            .map_err(|e| field_err("p", &row[5], format!("{e}")))?;
        records.push(SessionRecord { t, x, ell, ell_a, p });
    }
    Ok(records)
}

pub fn sweep(params: &ModelParams, args: &SweepArgs, out: &OutDir) -> Result<Outcome, CliError> {
    let values = parse_value_list(&args.values)?;
    let vary = SweepParam::from(args.param);
    let results: Vec<(f64, String, Result<Vec<String>, CliError>)> = values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            let dir_name = format!("point_{index:03}");
            let point_params = vary.apply(params, value);
            let result = out.subdir(&dir_name).and_then(|sub| {
                let outcome = match args.op {
                    SweepOpArg::Separatrix => separatrix(
                        &point_params,
                        &SeparatrixArgs {
                            resolution: args.resolution,
                        },
                        &sub,
                    )?,
                    SweepOpArg::Equilibria => equilibria(&point_params, &sub)?,
                    SweepOpArg::Crossing => crossing(
                        &point_params,
                        &CrossingArgs {
                            theta0: args.theta0,
                            p0: args.p0,
                            t_max: args.t_max,
                        },
                        &sub,
                    )?,
                };
                Ok(outcome.outputs)
            });
            (value, dir_name, result)
        })
        .collect();

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["index", "param", "value", "status", "dir", "error"])
        .map_err(|e| CliError::Data(format!("index.csv: {e}")))?;
    let mut outputs = vec!["index.csv".to_string()];
    let mut failures = 0;
    for (index, (value, dir_name, result)) in results.iter().enumerate() {
        let (status, error) = match result {
            Ok(files) => {
                for file in files {
                    outputs.push(format!("{dir_name}/{file}"));
                }
                ("ok", String::new())
            }
            Err(e) => {
                failures += 1;
                ("error", e.to_string())
            }
        };
        writer
            .write_record([
                &index.to_string(),
                vary.name(),
                &artifacts::sig12(*value),
                status,
                dir_name,
                &error,
            ])
            .map_err(|e| CliError::Data(format!("index.csv: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Data(format!("index.csv: {e}")))?;
    let text = String::from_utf8(bytes).map_err(|e| CliError::Data(format!("index.csv: {e}")))?;
    out.write_text("index.csv", &text)?;

    let mut outcome = Outcome::new(json!({
        "params": params,
        "op": args.op.name(),
        "param": vary.name(),
        "values": values,
    }));
    outcome.outputs = outputs;
    outcome.failures = failures;
    Ok(outcome)
}
