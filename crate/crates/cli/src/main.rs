#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod range;
mod table;

use range::Values;
use table::{Format, Sink};

#[derive(Debug, Parser)]
#[command(name = "sqs", version, about = "Phase diagrams and Fisher information of the single spherical quantum spin")]
struct Cli {
    /// Output file; a `<out>.manifest.json` sidecar is written next to it.
    /// Results go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Root-finding tolerance, and the distance from a critical point at
    /// which a value is reported as divergent.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Equilibrium,
    Ness,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a (g, T) or (g, gamma) grid and trace the critical line.
    PhaseDiagram(PhaseDiagramArgs),
    /// Quantum Fisher information along g.
    Qfi(QfiArgs),
    /// Photon-counting Fisher information over g and measurement frequency.
    Fisher(FisherArgs),
    /// Photon-counting Fisher information at fixed g against squeezing r.
    FisherVsSqueezing(SqueezingArgs),
    /// Run the analytic-vs-oracle acceptance checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PhaseDiagramArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// g values, `min:max:steps` or a list.
    #[arg(long)]
    pub g: Values,
    /// Temperatures (equilibrium mode).
    #[arg(long, required_if_eq("mode", "equilibrium"), conflicts_with = "gamma")]
    pub t: Option<Values>,
    /// Dissipation rates (ness mode).
    #[arg(long, required_if_eq("mode", "ness"))]
    pub gamma: Option<Values>,
}

#[derive(Debug, Args, Serialize)]
pub struct QfiArgs {
    #[arg(long, value_enum, default_value_t = Mode::Equilibrium)]
    pub mode: Mode,
    #[arg(long)]
    pub g: Values,
    /// Dissipation rates (ness mode).
    #[arg(long, required_if_eq("mode", "ness"))]
    pub gamma: Option<Values>,
}

#[derive(Debug, Args, Serialize)]
pub struct FisherArgs {
    #[arg(long)]
    pub g: Values,
    /// Measurement frequencies Omega.
    #[arg(long)]
    pub omega: Values,
    /// Largest probability mass left beyond the last photon number.
    #[arg(long, default_value_t = sqs_core::metrology::DEFAULT_TAIL_THRESHOLD)]
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Below,
    Above,
}

#[derive(Debug, Args, Serialize)]
pub struct SqueezingArgs {
    #[arg(long)]
    pub g: f64,
    #[arg(long)]
    pub r: Values,
    /// Which measurement frequency realizes each r.
    #[arg(long, value_enum, default_value_t = Branch::Below)]
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Level::Quick)]
    pub level: Level,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    ValidationFailed = 1,
    Usage = 2,
    PartialFailure = 3,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(Status::Usage as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(Status::Usage as u8);
        }
    }
    if !(cli.tol > 0.0) {
        eprintln!("error: --tol must be positive");
        return ExitCode::from(Status::Usage as u8);
    }

    let sink = Sink {
        out: cli.out.clone(),
        format: cli.format,
    };
    let result = match &cli.command {
        Command::PhaseDiagram(args) => commands::phase_diagram(args, cli.tol, &sink),
        Command::Qfi(args) => commands::qfi(args, cli.tol, &sink),
        Command::Fisher(args) => commands::fisher(args, &sink),
        Command::FisherVsSqueezing(args) => commands::fisher_vs_squeezing(args, &sink),
        Command::Validate(args) => commands::validate(args, &sink),
    };
    let status = match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    };
    ExitCode::from(status as u8)
}
