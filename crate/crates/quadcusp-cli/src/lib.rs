//! Experiment harness for `quadcusp`: configuration, deterministic artifact output and the
//! acceptance experiments behind the `quadcusp` command-line tool.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{ConfigOverrides, ExperimentConfig, EXPERIMENTS};
pub use output::{Check, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("malformed config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Library(#[from] quadcusp::Error),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// Runs one experiment and writes its artifacts to `out/<experiment>/`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, HarnessError> {
    cfg.validate()?;
    let dir: PathBuf = out.join(&cfg.experiment);
    let mut ctx = output::Ctx::new(cfg, &dir)?;
    experiments::dispatch(&mut ctx)?;
    ctx.finish()
}
