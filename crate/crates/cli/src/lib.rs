//! Command-line front end for `entwit`.

pub mod commands;
pub mod matrix_file;
pub mod params;

pub use commands::{run, Cli};
