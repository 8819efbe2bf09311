//! Library side of the `aei` command: configuration, pipeline, bundle and rendering.

pub mod bundle;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plotdata;
pub mod reference;
pub mod report;
pub mod synth;

pub use config::{load_config, ResolvedConfig, RunConfig};
pub use error::{CliError, CliResult};
