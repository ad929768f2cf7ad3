use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ouq", about = "Worst-case CDF envelopes and robust quantiles under moment constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a problem and write its result files.
    Run { config: PathBuf },
    /// Check a problem file without running it.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => match ouq::run(&config, &mut std::io::stderr()) {
            Ok(summary) => {
                for f in &summary.files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code())
            }
        },
        Command::Validate { config } => match ouq::runner::load(&config) {
            Ok((problem, _)) => {
                println!("ok: {} inputs", problem.specs.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Version => {
            println!("ouq {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
