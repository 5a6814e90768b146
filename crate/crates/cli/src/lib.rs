//! File formats, experiment drivers and CSV output for the `dyncomm`
//! benchmark harness.

pub mod commands;
pub mod error;
pub mod formats;

pub use commands::{
    cmd_affected_stats, cmd_gen_batch, cmd_run, cmd_scaling, run_records, Config, InputFormat, RunRecord,
    ScalingRecord,
};
pub use error::{CliError, Result};
