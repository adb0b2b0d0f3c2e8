//! Configuration, run modes and report emission for the `css` binary.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod modes;
pub mod profile;
pub mod report;

use std::path::PathBuf;

pub use config::RunConfig;
pub use error::CliError;
pub use modes::{Registry, RunContext, RunMode};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Validates `config`, runs its mode from the standard registry and writes
/// `report.json` into the output directory.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    run_with(&Registry::standard(), config)
}

pub fn run_with(registry: &Registry, config: &RunConfig) -> Result<RunSummary, CliError> {
    let mode = registry.get(&config.mode).ok_or_else(|| {
        CliError::Config(format!(
            "unknown mode `{}` (available: {})",
            config.mode,
            registry.names().join(", ")
        ))
    })?;
    config.validate()?;
    let dir = &config.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let ctx = RunContext {
        config,
        out_dir: dir,
    };
    let out = mode.run(&ctx)?;
    let report = dir.join("report.json");
    report::write_report(&report, &out.report)?;
    match out.failure {
        Some(e) => Err(e),
        None => Ok(RunSummary {
            report,
            files: out.files,
        }),
    }
}
