use std::process::ExitCode;

use clap::Parser;
use frv_cli::args::Cli;
use frv_cli::error::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match frv_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::SolverFailure { report, .. } = &e {
                eprintln!("{report}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
