//! Subcommand implementations.

use std::fmt;
use std::path::PathBuf;

use crate::config::{Config, ConfigError};

pub mod benchmark;
pub mod diagnose;
pub mod moments;
pub mod optimize;

/// Failure classes map to exit codes: config 2, numeric 3, I/O 1.
#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "config error: {m}"),
            CmdError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CmdError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Io(_) => 1,
            CmdError::Config(_) => 2,
            CmdError::Numeric(_) => 3,
        }
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e.to_string())
    }
}

/// Everything a subcommand needs.
pub struct Ctx {
    pub cfg: Config,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Ctx {
    pub fn new(cfg: Config, seed: u64, output_dir: PathBuf) -> Result<Self, CmdError> {
        std::fs::create_dir_all(&output_dir)?;
        Ok(Ctx {
            cfg,
            seed,
            output_dir,
        })
    }
}
