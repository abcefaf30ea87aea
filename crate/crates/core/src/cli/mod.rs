//! Config-driven runs: parsing, planning, orchestration and file output.

mod config;
mod run;
mod snapshot;

pub use config::{load_config, parse_config, Mode, OutputConfig, RunConfig};
pub use run::{describe, initial_state, run, Outcome, EXIT_FAILURE, EXIT_OK, EXIT_VIOLATION};
pub use snapshot::{read_hybrid, read_sections, write_field, write_hybrid, FieldSection};

/// Environment variable that overrides the worker thread count.
pub const THREADS_ENV: &str = "HYBRID_SIM_THREADS";

/// Reads [`THREADS_ENV`]; `None` when unset, an error message when invalid.
pub fn thread_override() -> Option<std::result::Result<usize, String>> {
    let v = std::env::var(THREADS_ENV).ok()?;
    Some(match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
    })
}
