//! Command-line surface of vecjoin: data generation, joins, top-k probes,
//! cost estimation and the experiment harness.

pub mod bench;
pub mod commands;
pub mod error;
pub mod formats;
pub mod model_spec;

pub use error::{CliError, CliResult};
