//! File formats, configuration and stage drivers for the `deisolab` command.

pub mod artifact;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use config::{PipelineConfig, Stage};
pub use error::{CliError, Result};
