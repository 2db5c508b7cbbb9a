//! Measure files, generator specs, CSV output and the `mfkit` command line.

pub mod cli;
pub mod csv;
pub mod error;
pub mod measure_file;
pub mod spec;

pub use error::{Error, Result};
