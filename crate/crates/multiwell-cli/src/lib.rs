//! Library half of the CLI: config resolution, run orchestration, record
//! serialization, and SVG rendering, kept out of `main.rs` so integration
//! tests can drive them directly.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod record;
pub mod render;
pub mod run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Spectrum(#[from] multiwell::spectrum::SpectrumError),
    #[error(transparent)]
    Limits(#[from] multiwell::limits::LimitsError),
    #[error("render error: {0}")]
    Render(String),
}
