//! Library surface of the `qfim` command-line tool.
//!
//! The binary is a thin shell over [`run`]; everything observable — flag
//! resolution, config-file merging, the JSON encodings, and the exit-code
//! contract — lives here so integration tests can drive it directly.

pub mod commands;
pub mod config;
pub mod schema;

pub use commands::CmdError;
pub use config::{Cli, Command};

/// Execute a parsed command line and return the process exit code.
///
/// `Ok(code)` means the command ran to completion (0 = success, 1 = a
/// verification check failed but the report was written); `Err` carries a
/// diagnostic for stderr plus its own code (2 = invalid input, 3 =
/// unbounded-Fisher or refused rank-deficient state).
pub fn run(cli: Cli) -> Result<i32, CmdError> {
    match cli.command {
        Command::Fisher(args) => commands::cmd_fisher(args.resolve()?),
        Command::Verify(args) => commands::cmd_verify(args.resolve()?),
        Command::Minvar(args) => commands::cmd_minvar(args.resolve()?),
        Command::Counterexample(args) => commands::cmd_counterexample(args.resolve()?),
    }
}
