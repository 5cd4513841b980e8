//! `dlab`: command-line front end for the skill-delegation phase-plane
//! toolkit. Every subcommand writes its artifacts plus a `manifest.json`
//! into the output directory and prints a one-line summary.

mod artifacts;
mod commands;
mod params;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlab_core::separatrix::SweepParam;

use artifacts::{OutDir, RunManifest};
use commands::Outcome;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config keys, or value lists; exits with code 2.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dlab_core::CoreError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    /// Malformed input or output data; exits with code 1.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(_) => "model",
            CliError::Io { .. } => "io",
            CliError::Data(_) => "data",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dlab",
    version,
    about = "Phase-plane toolkit for a coupled skill-delegation learning model",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(flatten)]
    params: params::ParamFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Flat `key = value` parameter file; flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for artifacts, created if missing.
    #[arg(
        long,
        global = true,
        env = "DLAB_OUT_DIR",
        default_value = "dlab-out",
        value_name = "DIR"
    )]
    out_dir: PathBuf,
    /// Worker threads for parallel commands; defaults to all cores.
    #[arg(long, global = true, env = "DLAB_JOBS", value_name = "N")]
    jobs: Option<usize>,
    /// On failure, print a machine-readable error object to stdout.
    #[arg(long, global = true)]
    error_json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory of the deterministic flow, the discrete
    /// learner, or the noisy-delegation diffusion.
    Simulate(SimulateArgs),
    /// List all rest points with their linearization.
    Equilibria,
    /// Trace the basin boundary and export its closed-form approximation.
    Separatrix(SeparatrixArgs),
    /// Classify a grid of initial states by their limit.
    Basin(BasinArgs),
    /// Loss gap between the assisted learner and the unassisted baseline.
    Gap(GapArgs),
    /// Last sign change of the loss gap.
    Crossing(CrossingArgs),
    /// Crossing times across a list of assistant skill values.
    CrossingCurve(CrossingCurveArgs),
    /// Estimate model parameters from a session log.
    Estimate(EstimateArgs),
    /// Run one operation across a list of parameter values.
    Sweep(SweepArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Equilibria => "equilibria",
            Command::Separatrix(_) => "separatrix",
            Command::Basin(_) => "basin",
            Command::Gap(_) => "gap",
            Command::Crossing(_) => "crossing",
            Command::CrossingCurve(_) => "crossing-curve",
            Command::Estimate(_) => "estimate",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Ode,
    Discrete,
    Sde,
}

impl SimMode {
    pub fn name(self) -> &'static str {
        match self {
            SimMode::Ode => "ode",
            SimMode::Discrete => "discrete",
            SimMode::Sde => "sde",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Initial skill.
    #[arg(long)]
    pub theta0: f64,
    /// Initial delegation level.
    #[arg(long)]
    pub p0: f64,
    #[arg(long, value_enum, default_value_t = SimMode::Ode)]
    pub mode: SimMode,
    /// Time horizon (ode and sde modes).
    #[arg(long, default_value_t = 20.0)]
    pub t_end: f64,
    /// Integrator step (ode and sde modes).
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Learning step size (discrete mode).
    #[arg(long, default_value_t = 1e-3)]
    pub eta: f64,
    /// Number of sessions (discrete mode).
    #[arg(long, default_value_t = 1000)]
    pub n_steps: usize,
    /// Delegation noise level (sde mode).
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Random seed (discrete and sde modes).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SeparatrixArgs {
    /// Node count of the exported polyline.
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasinMethodArg {
    Deterministic,
    Sde,
}

#[derive(Debug, Args)]
pub struct BasinArgs {
    /// Grid points per axis over [0, 1].
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = BasinMethodArg::Deterministic)]
    pub method: BasinMethodArg,
    /// Delegation noise level (sde method).
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Sample paths per cell (sde method).
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Random seed (sde method).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time horizon per path (sde method).
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    /// Euler-Maruyama step (sde method).
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    /// Shared initial skill of both learners.
    #[arg(long, default_value_t = 0.4)]
    pub theta0: f64,
    /// Initial delegation level of the assisted learner.
    #[arg(long, default_value_t = 0.3)]
    pub p0: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct CrossingArgs {
    /// Shared initial skill of both learners.
    #[arg(long, default_value_t = 0.4)]
    pub theta0: f64,
    /// Initial delegation level of the assisted learner.
    #[arg(long, default_value_t = 0.3)]
    pub p0: f64,
    /// Scan horizon for sign changes.
    #[arg(long, default_value_t = 200.0)]
    pub t_max: f64,
}

#[derive(Debug, Args)]
pub struct CrossingCurveArgs {
    /// Comma-separated assistant skill values.
    #[arg(long, default_value = "")]
    pub values: String,
    #[arg(long, default_value_t = 0.4)]
    pub theta0: f64,
    #[arg(long, default_value_t = 0.3)]
    pub p0: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_max: f64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Session log CSV with header `t,decision,x,ell,ell_a,p`.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Use the literal loss mean inside the assistant-skill square root.
    #[arg(long)]
    pub literal_theta_a: bool,
    /// Current skill for the outcome prediction; overrides the default
    /// read off the log. Requires --p0.
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Current delegation level for the outcome prediction.
    #[arg(long)]
    pub p0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepOpArg {
    Separatrix,
    Equilibria,
    Crossing,
}

impl SweepOpArg {
    pub fn name(self) -> &'static str {
        match self {
            SweepOpArg::Separatrix => "separatrix",
            SweepOpArg::Equilibria => "equilibria",
            SweepOpArg::Crossing => "crossing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParamArg {
    ThetaA,
    Kappa,
    Delta,
}

impl From<SweepParamArg> for SweepParam {
    fn from(arg: SweepParamArg) -> Self {
        match arg {
            SweepParamArg::ThetaA => SweepParam::ThetaA,
            SweepParamArg::Kappa => SweepParam::Kappa,
            SweepParamArg::Delta => SweepParam::Delta,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Operation to repeat at each value.
    #[arg(long, value_enum)]
    pub op: SweepOpArg,
    /// Parameter the sweep varies.
    #[arg(long, value_enum)]
    pub param: SweepParamArg,
    /// Comma-separated parameter values; empty runs nothing but still
    /// writes the index.
    #[arg(long, default_value = "")]
    pub values: String,
    /// Polyline resolution (separatrix op).
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
    /// Initial skill (crossing op).
    #[arg(long, default_value_t = 0.4)]
    pub theta0: f64,
    /// Initial delegation level (crossing op).
    #[arg(long, default_value_t = 0.3)]
    pub p0: f64,
    /// Scan horizon (crossing op).
    #[arg(long, default_value_t = 200.0)]
    pub t_max: f64,
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let out = OutDir::create(&cli.global.out_dir)?;
    if let Command::Estimate(args) = &cli.command {
        return commands::estimate(args, &out);
    }
    let params = params::resolve(&cli.params, cli.global.config.as_deref())?;
    for warning in params.validate().warnings() {
        eprintln!("warning: {}", warning.message);
    }
    match &cli.command {
        Command::Simulate(args) => commands::simulate(&params, args, &out),
        Command::Equilibria => commands::equilibria(&params, &out),
        Command::Separatrix(args) => commands::separatrix(&params, args, &out),
        Command::Basin(args) => commands::basin(&params, args, &out),
        Command::Gap(args) => commands::gap(&params, args, &out),
        Command::Crossing(args) => commands::crossing(&params, args, &out),
        Command::CrossingCurve(args) => commands::crossing_curve(&params, args, &out),
        Command::Estimate(_) => unreachable!("handled above"),
        Command::Sweep(args) => commands::sweep(&params, args, &out),
    }
}

fn fail(cli: &Cli, err: &CliError) -> ! {
    if cli.global.error_json {
        let body = serde_json::json!({
            "error": {
                "kind": err.kind(),
                "exit_code": err.exit_code(),
                "message": err.to_string(),
            }
        });
        println!("{body}");
    }
    eprintln!("error: {err}");
    std::process::exit(err.exit_code());
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.global.jobs {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
        if let Err(e) = pool {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let started = Instant::now();
    let outcome = match run(&cli) {
        Ok(outcome) => outcome,
        Err(err) => fail(&cli, &err),
    };
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: outcome.config,
        seeds: outcome.seeds,
        outputs: outcome.outputs,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    let out = match OutDir::create(&cli.global.out_dir) {
        Ok(out) => out,
        Err(err) => fail(&cli, &err),
    };
    if let Err(err) = out.write_json("manifest.json", &manifest) {
        fail(&cli, &err);
    }
    println!(
        "{}: wrote {} artifact file(s) to {}",
        manifest.command,
        manifest.outputs.len(),
        cli.global.out_dir.display()
    );
    if outcome.failures > 0 {
        let err = CliError::Data(format!(
            "{} sweep point(s) failed; see index.csv",
            outcome.failures
        ));
        fail(&cli, &err);
    }
}
