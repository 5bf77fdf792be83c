//! Benchmark harness for the model zoo: runs the evaluation pipeline on a
//! price series and exports a score table, prediction series and model
//! checkpoints.

pub mod config;
pub mod export;
pub mod forecast;
pub mod pipeline;

pub use config::{BenchConfig, ConfigError};
pub use export::export;
pub use pipeline::{run_benchmark, BenchError, ModelRun, PredictionRow, RunReport, Split};
