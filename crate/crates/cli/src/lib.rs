//! Configuration loading, experiment orchestration and chart emission for
//! the `fsbench` command.

pub mod config;
pub mod error;
pub mod methods;
pub mod plot;
pub mod run;

pub use config::{load, Loaded, RunConfig};
pub use error::{CliError, CliResult, ErrorKind};
pub use methods::MethodSpec;
