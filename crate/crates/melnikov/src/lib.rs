//! Command-line driver around `melnikov-core`: reads a JSON configuration,
//! builds the Melnikov vector, locates its zeros and checks them against
//! the perturbed flow.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{CliError, Command, Session};
pub use config::AnalysisConfig;
