//! File formats, experiment harness and command-line driver built on
//! [`scca_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;

pub use error::{AppError, Result};
pub use scca_core;
