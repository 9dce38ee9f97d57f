//! Command-line surface, JSON configuration and result files for `lrce-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod parallel;

pub use bundle::{CommandResult, ResultBundle};
pub use config::{load_config, RunConfig};
pub use error::CliError;
