//! Command-line front end: `hokdv coeffs | dispersion | simulate | scan | velocity`.
//!
//! Exit status is 0 on success, 2 when an invariant-drift alarm was raised
//! and 1 on any error, usage errors included.

pub mod config;
pub mod output;
pub mod run;

use clap::error::ErrorKind;
use clap::Parser;

/// Runs the tool on `argv` and returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match config::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
        }
    };
    let outcome = config::resolve(&cli.command).and_then(|cfg| run::run_subcommand(&cfg));
    match outcome {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("hokdv: error: {e:#}");
            1
        }
    }
}
