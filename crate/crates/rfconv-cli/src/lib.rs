//! Command-line front end for `rfconv`: configuration, commands and CSV output.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use args::{Cli, Command};
use error::CliError;

/// Execute a parsed invocation and return the files it wrote.
pub fn run(cli: &Cli) -> Result<commands::Written, CliError> {
    let cfg = cli.common.resolve()?;
    if cli.common.print_config {
        print!("{}", cfg.to_toml());
        return Ok(vec![]);
    }
    cfg.validate()?;
    match &cli.command {
        Command::Theory { diagnostics } => commands::theory(&cfg, *diagnostics),
        Command::Simulate => commands::simulate(&cfg),
        Command::Compare => commands::compare(&cfg),
        Command::KernelLimit { mode } => commands::kernel_limit(&cfg, *mode),
        Command::Powerlaw(a) => commands::powerlaw(&cfg, a),
        Command::LogdetCheck => commands::logdet_check(&cfg),
    }
}
