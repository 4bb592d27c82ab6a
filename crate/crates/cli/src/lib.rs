//! Experiment harness for `nse3dvar-core`: configuration, file formats,
//! the command implementations, parameter sweeps and plot scripts.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod sweep;

pub use config::Config;
pub use error::{CliError, ConfigError};
