//! Front end for the `covshrink` binary.
//!
//! Exit codes: 0 success, 2 configuration or data error, 3 I/O error,
//! 4 sampler failure. Human-readable messages go to stderr; files carry the
//! machine-readable output.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{EffectiveConfig, PartialConfig};
pub use error::{CliError, ExitKind};
