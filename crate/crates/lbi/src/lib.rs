//! File formats, experiment runners and the subcommands of the `lbi` binary,
//! on top of `lbi-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod checkpoint;
pub mod commands;
pub mod config;
mod error;
pub mod experiment;
pub mod io;
pub mod output;

pub use error::{CliError, Result};
