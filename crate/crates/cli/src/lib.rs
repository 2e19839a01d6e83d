//! Experiment harness for the `fitbo` library: repeated optimisation runs
//! with aggregate regret curves, and the acquisition runtime benchmark.

pub mod bench;
pub mod error;
pub mod output;
pub mod run;
pub mod stats;

pub use bench::{cmd_bench_runtime, RuntimeConfig, RuntimeReport};
pub use error::{CliError, Result};
pub use run::{cmd_run, ExperimentConfig, Method, RunReport};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FITBO_OUT_DIR";

/// `$FITBO_OUT_DIR`, or `results` under the working directory.
pub fn default_out_dir() -> std::path::PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(Into::into)
        .unwrap_or_else(|| "results".into())
}
