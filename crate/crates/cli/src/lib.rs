//! Experiment runner for the fracheat numerical core: TOML configs in, a
//! self-describing run directory out.

pub mod catalog;
pub mod config;
pub mod error;
mod experiments;
pub mod run;

pub use config::{ExperimentConfig, Kind};
pub use error::CliError;
pub use run::{check, run, Manifest, RunOutcome};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "FRACHEAT_THREADS";

/// Sizes the global thread pool from `FRACHEAT_THREADS`, if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Config {
        field: THREADS_ENV.into(),
        message: format!("expected a thread count, got {v:?}"),
    })?;
    // a pool that was already built keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}
