//! File formats, report bundles and the `beliefspace` command-line tool built
//! on `beliefspace-core`.

pub mod bundle;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod io;
pub mod manifest;
pub mod svg;

pub use error::{CliError, CliResult};
