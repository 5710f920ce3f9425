//! The `lmar` command line: `simulate`, `theory` and `experiment`.

pub mod app;
pub mod error;
pub mod format;
pub mod manifest;
pub mod plots;
pub mod svg;

pub use app::{run, THREADS_ENV};
pub use error::{CliError, CliResult};
