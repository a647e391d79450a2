//! Scenario loading, command dispatch and report files for the `maxslope`
//! command-line tool.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
pub mod selftest;

pub use commands::{run_command, Command, Outcome, Overrides};
pub use error::CliError;
pub use scenario::{builtin, load_scenario, parse_scenario, Scenario};

/// Sizes the global thread pool from `MAXSLOPE_THREADS` when it is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MAXSLOPE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("MAXSLOPE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}
