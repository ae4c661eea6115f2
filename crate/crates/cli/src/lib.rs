//! The `frv` command-line tool.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod svg;

use args::{Cli, Command};
use error::{CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        // a second call within one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Sample(a) => commands::sample(a),
        Command::Verify(a) => commands::verify(a),
        Command::Border(a) => commands::border(a),
        Command::Plot(a) => commands::plot(a),
    }
}
