//! `polclone`: single cloning runs, parameter sweeps, dispersion curves,
//! oracle validation, and readout demonstrations, emitting deterministic
//! CSV or JSON.
//!
//! Exit codes: 0 success (all checks pass), 1 validation failure (an oracle
//! check out of tolerance), 2 configuration error, 3 I/O error.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{OutputFormat, RunConfig};
use output::Emitter;

/// Everything that can go wrong, sorted by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or unusable configuration (exit 2).
    Config(String),
    /// Reading or writing files failed (exit 3).
    Io(String),
    /// One or more validation checks out of tolerance (exit 1).
    Checks(Vec<String>),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Checks(names) => {
                writeln!(f, "validation failed: {} check(s) out of tolerance:", names.len())?;
                for name in names {
                    writeln!(f, "  {name}")?;
                }
                Ok(())
            }
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Checks(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "polclone",
    version,
    about = "Continuous-variable cloning onto cavity polaritons: runs, sweeps, and validation"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output serialization (default: csv for dispersion/sweep, json otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Seed for the randomized validation draws.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress chatter.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the polariton branch energies over in-plane wave vector.
    Dispersion(DispersionArgs),
    /// Run the cloning pipeline once and report both clones.
    Clone(CloneArgs),
    /// Run the cloning pipeline over a parameter grid.
    Sweep,
    /// Run the validation suite pitting the moment engine against the
    /// number-basis oracle.
    Oracle(OracleArgs),
    /// Emit the readout schedule that swaps the stored dark clone back
    /// onto the light.
    Readout(ReadoutArgs),
}

#[derive(Args)]
struct DispersionArgs {
    /// Upper end of the wave-vector scan.
    #[arg(long)]
    k_par_max: Option<f64>,
    /// Number of scan points.
    #[arg(long)]
    n_points: Option<usize>,
}

#[derive(Args)]
struct CloneArgs {
    /// Real part of the optical input amplitude.
    #[arg(long)]
    gamma_re: Option<f64>,
    /// Imaginary part of the optical input amplitude.
    #[arg(long)]
    gamma_im: Option<f64>,
    /// Input signal variance (1 = coherent state).
    #[arg(long)]
    v_in: Option<f64>,
    /// Amplifier gain G.
    #[arg(long)]
    gain: Option<f64>,
    /// Ensemble size N.
    #[arg(long)]
    n: Option<u64>,
    /// Lower-state population fraction |α|².
    #[arg(long)]
    alpha2: Option<f64>,
    /// Ensemble relative phase.
    #[arg(long)]
    phi_rel: Option<f64>,
    /// Detuning steering the mixer coefficients.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    /// Tolerance of the engine-vs-oracle comparison checks.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Per-mode occupation cutoff of the comparison runs.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Amplitude-count cap for the oracle's state spaces.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
struct ReadoutArgs {
    /// End of the interaction-time grid.
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of time-grid points.
    #[arg(long)]
    n_points: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.global.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(format) = cli.global.format {
        cfg.output.format = Some(format);
    }
    if let Some(seed) = cli.global.seed {
        cfg.oracle.seed = seed;
    }
    if cli.global.quiet {
        cfg.output.quiet = true;
    }

    match &cli.command {
        Command::Dispersion(a) => {
            if let Some(v) = a.k_par_max {
                cfg.dispersion.k_par_max = v;
            }
            if let Some(v) = a.n_points {
                cfg.dispersion.n_points = v;
            }
        }
        Command::Clone(a) => {
            let p = &mut cfg.protocol;
            if let Some(v) = a.gamma_re {
                p.gamma_re = v;
            }
            if let Some(v) = a.gamma_im {
                p.gamma_im = v;
            }
            if let Some(v) = a.v_in {
                p.v_in = v;
            }
            if let Some(v) = a.gain {
                p.gain = v;
            }
            if let Some(v) = a.n {
                p.n = v;
            }
            if let Some(v) = a.alpha2 {
                p.alpha2 = v;
            }
            if let Some(v) = a.phi_rel {
                p.phi_rel = v;
            }
            if let Some(v) = a.delta {
                p.delta = v;
            }
        }
        Command::Sweep => {}
        Command::Oracle(a) => {
            if let Some(v) = a.tolerance {
                cfg.oracle.tolerance = v;
            }
            if let Some(v) = a.cutoff {
                cfg.oracle.cutoff = v;
            }
            if let Some(v) = a.cap {
                cfg.oracle.cap = v;
            }
        }
        Command::Readout(a) => {
            if let Some(v) = a.t_max {
                cfg.readout.t_max = Some(v);
            }
            if let Some(v) = a.n_points {
                cfg.readout.n_points = v;
            }
        }
    }

    cfg.validate()?;
    let format = cfg.output.format.unwrap_or(match cli.command {
        Command::Dispersion(_) | Command::Sweep => OutputFormat::Csv,
        _ => OutputFormat::Json,
    });

    let rendered = match &cli.command {
        Command::Dispersion(_) => commands::dispersion(&cfg, format)?,
        Command::Clone(_) => commands::clone_run(&cfg, format)?,
        Command::Sweep => commands::sweep_run(&cfg, format)?,
        Command::Oracle(_) => commands::oracle_run(&cfg, format)?,
        Command::Readout(_) => commands::readout_run(&cfg, format)?,
    };

    let emitter = Emitter { path: cfg.output.path.clone(), quiet: cfg.output.quiet };
    emitter.emit(&rendered.payload, rendered.rows, rendered.label)?;

    if rendered.failed_checks.is_empty() {
        Ok(())
    } else {
        Err(CliError::Checks(rendered.failed_checks))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
