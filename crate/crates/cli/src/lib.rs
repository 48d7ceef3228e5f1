//! Command-line front end: configuration, slice rasterization, batch
//! classification and report files.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod slice;

pub use args::{run, Cli, Job};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

/// Version string embedded in every output file.
pub const VERSION: &str = concat!("qauto ", env!("CARGO_PKG_VERSION"));
