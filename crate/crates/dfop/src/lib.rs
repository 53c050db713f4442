//! Command-line driver, file formats and experiment runners for
//! [`dfop_core`].
//!
//! The binary `dfop` exposes five subcommands (`generate`, `run`, `sweep`,
//! `verify`, `bound`); each is a thin wrapper over a function in this crate
//! so the same code paths are reachable from tests.

pub mod bound;
pub mod cli;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod runner;
pub mod sweep;
pub mod verify;

pub use error::{AppError, ErrorKind, Result};
