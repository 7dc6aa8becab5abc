//! Configuration-driven front end of the `hypsgn` solver: scenario runs,
//! convergence studies and right-hand side benchmarks.

pub mod commands;
pub mod config;
pub mod output;
pub mod scenario;

pub use commands::{bench_ladder, cmd_bench, cmd_converge, cmd_run, with_threads, BenchRow, RunOutcome};
pub use config::{resolve_threads, Config};
pub use scenario::build_scenario;
