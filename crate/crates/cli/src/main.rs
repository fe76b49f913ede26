//! `isoprofile`: runs one experiment from a JSON config and writes CSV/JSON
//! data files.
//!
//! Exit codes: 0 pass, 1 error (details as JSON on stderr), 2 a checked
//! inequality failed, 3 the hypotheses of a check could not be certified.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{Overrides, Run};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] isoprofile::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        use isoprofile::Error as E;
        match self {
            CliError::Config(_) => "invalid_config",
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Lib(e) => match e {
                E::InvalidParameter(_) => "invalid_parameter",
                E::NonIntegrable(_) => "non_integrable",
                E::NotUniformlyConvex(_) => "not_uniformly_convex",
                E::Quadrature { .. } => "quadrature",
                E::RootFinding(_) => "root_finding",
                E::Precondition(_) => "precondition",
                E::SamplerMismatch(_) => "sampler_mismatch",
                E::OutOfRange(_) => "out_of_range",
                E::Json(_) => "json",
                E::Io(_) => "io",
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "isoprofile", version, about = "Isoperimetric profile bounds and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (`"schema": 1`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for stochastic commands; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Tolerance for pass/fail comparisons; overrides the config.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Sweep lower-bound curves over a grid of ã.
    Profile,
    /// Compare 1D bounds against the exact profile of a density.
    Verify1d,
    /// Pushforward and Lipschitz study of the radial transport map.
    Transport,
    /// Monte Carlo enlargement of a half-space against concentration bounds.
    Concentrate,
    /// Estimate the modulus of convexity of a norm.
    Modulus,
    /// Check the capacity form of a certified profile on test functions.
    Functional,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Verify1d => "verify1d",
            Command::Transport => "transport",
            Command::Concentrate => "concentrate",
            Command::Modulus => "modulus",
            Command::Functional => "functional",
        }
    }
}

fn execute(cli: &Cli) -> Result<Run, CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let o = Overrides {
        seed: cli.seed,
        tol: cli.tol,
    };
    match cli.command {
        Command::Profile => commands::profile(config::load(path)?, o),
        Command::Verify1d => commands::verify1d(config::load(path)?, o),
        Command::Transport => commands::transport(config::load(path)?, o),
        Command::Concentrate => commands::concentrate(config::load(path)?, o),
        Command::Modulus => commands::modulus(config::load(path)?, o),
        Command::Functional => commands::functional(config::load(path)?, o),
    }
}

fn fail(command: Option<&str>, e: &CliError) -> ExitCode {
    let body = json!({
        "error": { "kind": e.kind(), "message": e.to_string(), "command": command }
    });
    eprintln!("{body}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail(None, &CliError::Usage(e.to_string().trim().to_string())),
    };
    let name = cli.command.name();
    let run = match execute(&cli) {
        Ok(r) => r,
        Err(e) => return fail(Some(name), &e),
    };
    let files = match run.outputs.commit(&cli.out) {
        Ok(f) => f,
        Err(e) => return fail(Some(name), &e),
    };
    let summary = json!({
        "command": name,
        "status": run.status,
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    println!("{summary}");
    ExitCode::from(run.status.exit_code())
}
