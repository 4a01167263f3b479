//! `rpe-lab`: robust phase estimation runs, scaling studies, robustness maps
//! and preparation circuits from the command line.
//!
//! Every command writes a JSON run manifest; `rpe-lab replay` re-executes one.
//! Exit codes: 0 success, 2 input error, 3 self-check failure.

mod commands;
mod manifest;

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rpe_lab::robustness::BoundForm;
use rpe_lab::rpe::{Mode, Unwrap};

use crate::manifest::{Invocation, RunManifest};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    SelfCheck(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::SelfCheck(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::SelfCheck(m) => write!(f, "self-check failed: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rpe-lab",
    version,
    about = "Robust phase estimation of Hamiltonian eigenvalue differences"
)]
struct Cli {
    /// Where to write the run manifest.
    #[arg(long, global = true, default_value = "rpe-lab-manifest.json")]
    manifest: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print eigenvalues (ascending) and trace.
    Spectrum { hamiltonian: PathBuf },
    /// Run the estimator on one eigenvalue pair.
    Rpe(RpeArgs),
    /// Repeat seeded runs and report per-generation errors.
    Scaling(ScalingArgs),
    /// Worst-case phase error map over the tied SPAM slice.
    Robustness(RobustnessArgs),
    /// Emit the preparation circuit for a pair.
    Prep(PrepArgs),
    /// Controlled-evolution CNOT cost.
    Cost {
        #[arg(long)]
        singles: u64,
        #[arg(long)]
        cnots: u64,
    },
    /// Re-execute a run manifest.
    Replay {
        manifest_in: PathBuf,
        /// Write outputs into this directory instead of the recorded paths.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SamplingArgs {
    /// Shots per circuit; omit for exact probabilities.
    #[arg(long, conflicts_with = "exact")]
    shots: Option<u64>,
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `auto` or a positive number.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    tau: String,
}

#[derive(Args, Debug)]
struct RpeArgs {
    hamiltonian: PathBuf,
    #[arg(long, num_args = 2, value_names = ["A", "B"], default_values_t = [0, 1])]
    pair: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    generations: u32,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, value_enum, default_value_t = UnwrapArg::Ordered)]
    unwrap: UnwrapArg,
    /// Result JSON; the per-generation CSV goes next to it.
    #[arg(long, default_value = "rpe.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    hamiltonian: PathBuf,
    #[arg(long, num_args = 2, value_names = ["A", "B"], default_values_t = [0, 1])]
    pair: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    generations: u32,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value = "scaling.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RobustnessArgs {
    #[arg(long, default_value_t = 201)]
    grid: usize,
    #[arg(long, default_value_t = 0.5)]
    max_eps: f64,
    #[arg(long, value_enum, default_value_t = FormArg::Corrected)]
    form: FormArg,
    /// Grid CSV; the contour CSV goes next to it.
    #[arg(long, default_value = "robustness.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PrepArgs {
    hamiltonian: PathBuf,
    #[arg(long, num_args = 2, value_names = ["A", "B"], default_values_t = [0, 1])]
    pair: Vec<usize>,
    /// Relative phase; accepts `pi/2` style shorthands.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    beta: String,
    /// Also write the circuit text here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum UnwrapArg {
    Ordered,
    Symmetric,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormArg {
    Corrected,
    Published,
}

fn parse_angle(text: &str) -> Result<f64, CliError> {
    let t = text.trim().to_ascii_lowercase();
    let value = match t.as_str() {
        "pi" => Some(std::f64::consts::PI),
        "pi/2" => Some(FRAC_PI_2),
        "pi/4" => Some(std::f64::consts::FRAC_PI_4),
        "-pi/2" => Some(-FRAC_PI_2),
        _ => t.parse::<f64>().ok(),
    };
    value
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Input(format!("cannot parse angle `{text}`")))
}

fn mode(s: &SamplingArgs) -> Mode {
    match (s.exact, s.shots) {
        (false, Some(shots)) => Mode::Sampled {
            shots,
            seed: s.seed,
        },
        _ => Mode::Exact,
    }
}

fn resolve(command: Command) -> Result<Invocation, CliError> {
    Ok(match command {
        Command::Spectrum { hamiltonian } => Invocation::Spectrum { hamiltonian },
        Command::Rpe(r) => {
            let tau = commands::resolve_tau(&r.hamiltonian, &r.sampling.tau)?;
            Invocation::Rpe {
                a: r.pair[0],
                b: r.pair[1],
                generations: r.generations,
                mode: mode(&r.sampling),
                tau,
                unwrap: match r.unwrap {
                    UnwrapArg::Ordered => Unwrap::Ordered,
                    UnwrapArg::Symmetric => Unwrap::Symmetric,
                },
                out: r.out,
                hamiltonian: r.hamiltonian,
            }
        }
        Command::Scaling(s) => {
            let tau = commands::resolve_tau(&s.hamiltonian, &s.sampling.tau)?;
            Invocation::Scaling {
                a: s.pair[0],
                b: s.pair[1],
                generations: s.generations,
                trials: s.trials,
                mode: mode(&s.sampling),
                tau,
                out: s.out,
                hamiltonian: s.hamiltonian,
            }
        }
        Command::Robustness(r) => Invocation::Robustness {
            grid: r.grid,
            max_eps: r.max_eps,
            form: match r.form {
                FormArg::Corrected => BoundForm::Corrected,
                FormArg::Published => BoundForm::Published,
            },
            out: r.out,
        },
        Command::Prep(p) => Invocation::Prep {
            a: p.pair[0],
            b: p.pair[1],
            beta: parse_angle(&p.beta)?,
            out: p.out,
            hamiltonian: p.hamiltonian,
        },
        Command::Cost { singles, cnots } => Invocation::Cost { singles, cnots },
        Command::Replay { .. } => unreachable!("replay is resolved from its manifest"),
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("RPE_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Input(format!(
                "RPE_LAB_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli, explicit_manifest: bool) -> Result<(), CliError> {
    configure_threads()?;
    let mut manifest_path = cli.manifest;
    let invocation = match cli.command {
        Command::Replay {
            manifest_in,
            out_dir,
        } => {
            let mut invocation = RunManifest::read(&manifest_in)?.parameters;
            if let Some(dir) = out_dir {
                invocation.rebase_outputs(&dir);
                if !explicit_manifest {
                    manifest_path =
                        dir.join(manifest_path.file_name().expect("default has a file name"));
                }
            }
            invocation
        }
        other => resolve(other)?,
    };
    commands::execute(&invocation)?;
    RunManifest::new(&invocation).write(&manifest_path)
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let explicit_manifest = matches.value_source("manifest") == Some(ValueSource::CommandLine);
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match run(cli, explicit_manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rpe-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
