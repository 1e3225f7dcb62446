use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jmgt::cli;

#[derive(Parser)]
#[command(name = "jmgt", version, about = "Spectral-Galerkin laboratory for the JMGT equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write run.csv, fn_rate.csv, report.json and plots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build a blow-up certificate for `certified` initial data.
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// Also simulate the certified data.
        #[arg(long)]
        run: bool,
    },
    /// Run a built-in verification suite (or `all`).
    Verify { suite: String },
    /// Run a parameter grid in parallel and write summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { cli::EXIT_CONFIG } else { cli::EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli.command {
        Command::Simulate { config } => cli::cmd_simulate(&config),
        Command::Certify { config, run } => cli::cmd_certify(&config, run),
        Command::Verify { suite } => cli::cmd_verify(&suite),
        Command::Sweep { config } => cli::cmd_sweep(&config),
    };
    ExitCode::from(code as u8)
}
