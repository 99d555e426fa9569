//! Configuration, stream files, experiment orchestration and CSV reports.

pub mod config;
pub mod experiment;
pub mod report;
pub mod stream_io;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, run_experiment_on, RunResult};
pub use report::{merge_report, write_report};
pub use stream_io::{load_stream, save_stream};

/// Shortest representation that parses back to the same `f64`, in plain
/// decimal for moderate magnitudes and scientific notation otherwise.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
