//! Worker budget. `RADLAB_THREADS` caps the pool; results never depend on its size.

use crate::error::CliError;

pub const THREADS_VAR: &str = "RADLAB_THREADS";

/// Worker count from `RADLAB_THREADS` (capped at the available parallelism).
pub fn worker_count() -> Result<usize, CliError> {
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR}={v:?} is not a positive integer")))?;
            Ok(n.min(avail))
        }
        Err(_) => Ok(avail),
    }
}

pub fn pool() -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| CliError::Failure(format!("cannot start worker pool: {e}")))
}
