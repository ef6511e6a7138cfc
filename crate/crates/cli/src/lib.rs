//! Instance files, random instances, benchmarks and plots for the
//! `polyellipse` command-line tool.

pub mod bench;
pub mod cli;
pub mod error;
pub mod generate;
pub mod instance_file;
pub mod plot;

pub use error::{CliError, Result};
