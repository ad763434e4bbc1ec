//! `hartman`: config-driven driver for the conjugacy solver.
//!
//! Exit codes: 0 all checks pass, 1 some check failed, 2 configuration or
//! usage error, 3 the matrix is not a usable hyperbolic system, 4 the
//! contraction or exponent/radius selection is infeasible, 5 a certificate
//! was rejected, 6 arithmetic or evaluation failure.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hartman_core::Error as CoreError;

use crate::config::{ConfigError, RunConfig};
use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Subcommand)]
enum Command {
    /// Verify hyperbolicity and falsify perturbation certificates.
    Check,
    /// Build and test the max-of-iterates renorm of a contraction.
    Renorm,
    /// Solve for v and w and run the residual suite.
    Solve,
    /// Select and check a Hölder certificate.
    Holder,
    /// Local linearization of A + R near 0.
    Linearize,
    /// Parameter-dependence sweep.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Renorm => "renorm",
            Command::Solve => "solve",
            Command::Holder => "holder",
            Command::Linearize => "linearize",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hartman", version, about = "Grobman-Hartman conjugacies with certified bounds")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|c| c.is::<ConfigError>()) {
        return 2;
    }
    let Some(core) = err.chain().find_map(|c| c.downcast_ref::<CoreError>()) else {
        return 2;
    };
    match core {
        CoreError::NotHyperbolic(_) | CoreError::Singular | CoreError::NotBlockDiagonal => 3,
        CoreError::NotContractive(_)
        | CoreError::DepthCap { .. }
        | CoreError::NoExponent(_)
        | CoreError::NoDelta(_)
        | CoreError::NoRadius(_) => 4,
        CoreError::BadCertificate(_) | CoreError::DeltaViolation(_) | CoreError::RadiusTooLarge(_) => 5,
        CoreError::DivisionByZero
        | CoreError::PrecisionExhausted { .. }
        | CoreError::Evaluation(_)
        | CoreError::MaxIterations(_) => 6,
        _ => 2,
    }
}

fn run(cli: &Cli, rep: &mut Report) -> anyhow::Result<()> {
    let cfg = RunConfig::load(&cli.config)?;
    let seed = cli.seed;
    match cli.command {
        Command::Check => commands::check(&cfg, seed, rep),
        Command::Renorm => commands::renorm(&cfg, seed, rep),
        Command::Solve => commands::solve(&cfg, seed, rep),
        Command::Holder => commands::holder(&cfg, seed, rep),
        Command::Linearize => commands::linearize(&cfg, seed, rep),
        Command::Sweep => commands::sweep(&cfg, seed, rep),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut rep = Report::new(cli.command.name(), cli.seed, &cli.config);
    let outcome = run(&cli, &mut rep);
    let code = match &outcome {
        Ok(()) => u8::from(!rep.pass()),
        Err(e) => {
            eprintln!("error: {e:#}");
            rep.fail_with(format!("{e:#}"));
            exit_code(e)
        }
    };
    if let Err(e) = rep.write(&cli.out) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    println!("{}: {}", cli.command.name(), if code == 0 { "pass" } else { "FAIL" });
    ExitCode::from(code)
}
