use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use semiwave::config::ExperimentConfig;
use semiwave::experiment::{Runner, Subcommand};
use semiwave::io::read_file;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Steady,
    Evolve,
    Semiwave,
    Speed,
    Rho,
    AlmostPeriod,
    Oracle,
    VerifyAll,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Steady => Subcommand::Steady,
            Command::Evolve => Subcommand::Evolve,
            Command::Semiwave => Subcommand::Semiwave,
            Command::Speed => Subcommand::Speed,
            Command::Rho => Subcommand::Rho,
            Command::AlmostPeriod => Subcommand::AlmostPeriod,
            Command::Oracle => Subcommand::Oracle,
            Command::VerifyAll => Subcommand::VerifyAll,
        }
    }
}

/// Semi-wave experiments for the free-boundary KPP-Fisher equation.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Output directory.
    #[arg(long, env = "SEMIWAVE_OUT", default_value = "out")]
    out: PathBuf,

    /// Worker threads for ladder runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Snapshot to continue from (`evolve` only).
    #[arg(long)]
    resume: Option<PathBuf>,

    /// Check the pull-back equation without the factor mu.
    #[arg(long)]
    mu_literal_veq: bool,
}

fn run(cli: Cli) -> semiwave::Result<bool> {
    let config = ExperimentConfig::parse(&read_file(&cli.config)?)?;
    let mut runner = Runner::new(config, cli.out);
    runner.jobs = cli.jobs;
    runner.resume = cli.resume;
    runner.mu_literal |= cli.mu_literal_veq;
    let summary = runner.run(cli.command.into())?;
    print!("{summary}");
    Ok(summary.all_pass())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
