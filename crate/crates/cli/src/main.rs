//! `pqlap`: reference spectra, eigenpair solves, branch traces, bifurcation
//! diagrams, multiplicity runs and the verification suite for the 1D
//! Dirichlet (p,q)-Laplacian eigenvalue problem.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::SolveTarget;
use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pqlap",
    version,
    about = "Eigenpairs of -Δp u - Δq u = λ|u|^(q-2)u on an interval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the Dirichlet spectrum of the pure q-Laplacian as CSV.
    SpectrumRef {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        /// Interval length.
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        /// Also write the CSV to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve for one eigenpair at prescribed λ or prescribed mass ρ.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, conflicts_with = "rho", required_unless_present = "rho")]
        lambda: Option<f64>,
        /// Prescribed ∫|u|^q.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 1)]
        mode: usize,
        /// Solve the original equation at fixed mass even when p < q.
        #[arg(long)]
        direct: bool,
        /// Amplitude of the seeded random perturbation of the initial guess.
        #[arg(long, default_value_t = 0.0)]
        perturbation: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Trace one branch over the configured mass grid.
    Branch {
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to the first configured mode.
        #[arg(long)]
        mode: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Trace the configured modes in parallel and draw the bifurcation diagram.
    Diagram {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated mode list overriding the configuration.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        modes: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// All eigenpairs at a given λ, one per mode below it.
    Multiplicity {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the acceptance criteria; exit status 1 if any fails.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated criterion names to run.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    elements: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self, seed: Option<u64>) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(n) = self.elements {
            cfg.elements = n;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SpectrumRef {
            q,
            k_max,
            length,
            output,
        } => commands::spectrum_ref(q, k_max, length, output.as_deref()),
        Command::Solve {
            run,
            lambda,
            rho,
            mode,
            direct,
            perturbation,
            seed,
        } => {
            let cfg = run.load(seed)?;
            let target = match (lambda, rho) {
                (Some(l), None) => SolveTarget::Lambda(l),
                (None, Some(r)) => SolveTarget::Rho(r),
                _ => {
                    return Err(CliError::Config(
                        "give exactly one of --lambda and --rho".into(),
                    ))
                }
            };
            commands::solve(&cfg, target, mode, direct, perturbation)
        }
        Command::Branch { run, mode, seed } => commands::branch(&run.load(seed)?, mode),
        Command::Diagram { run, modes, seed } => {
            let mut cfg = run.load(seed)?;
            if let Some(modes) = modes {
                cfg.modes = modes;
            }
            commands::diagram(&cfg)
        }
        Command::Multiplicity { run, lambda, seed } => {
            commands::multiplicity(&run.load(seed)?, lambda)
        }
        Command::Verify { run, only, seed } => commands::verify(&run.load(seed)?, &only),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
