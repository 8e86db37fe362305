//! Worker-pool plumbing for the verification routines.
//!
//! Parallelism is bounded by the `GRIDKIT_MAX_WORKERS` environment
//! variable; verdicts are conjunctions of independent checks, so results
//! are order-independent and deterministic.

use rayon::{ThreadPool, ThreadPoolBuilder};
use std::sync::OnceLock;

pub const MAX_WORKERS_ENV: &str = "GRIDKIT_MAX_WORKERS";

static POOL: OnceLock<ThreadPool> = OnceLock::new();

fn configured_workers() -> usize {
    std::env::var(MAX_WORKERS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// The shared pool; built on first use from `GRIDKIT_MAX_WORKERS`.
pub fn pool() -> &'static ThreadPool {
    POOL.get_or_init(|| {
        ThreadPoolBuilder::new()
            .num_threads(configured_workers())
            .build()
            .expect("worker pool")
    })
}

/// Runs `op` inside the bounded pool so that rayon parallel iterators used
/// within it respect the worker cap.
pub fn install<R: Send>(op: impl FnOnce() -> R + Send) -> R {
    pool().install(op)
}
