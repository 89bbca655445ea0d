//! File formats, experiment harness and the `srf` command line for
//! `srf-core`.

pub mod cli;
pub mod error;
pub mod harness;
pub mod io;

pub use error::{LabError, LabResult};
