//! Library surface of the experiment CLI: configuration, sweep execution,
//! and result emission. The `trdma` binary is a thin wrapper over these.

pub mod config;
pub mod emit;
pub mod runner;

pub use config::{ExperimentConfig, OutputFormat, PrecoderSpec};
pub use runner::{
    compare_precoders, complexity_report, run_sweep, AggregateRow, CompareResult, SweepResult,
};

/// CLI-level errors carrying the documented exit codes:
/// 1 config, 2 numerical, 3 I/O.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    /// Classifies a core error raised while validating configuration.
    pub fn from_config_err(e: trdma_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<trdma_core::Error> for CliError {
    fn from(e: trdma_core::Error) -> Self {
        use trdma_core::Error as E;
        match &e {
            E::InvalidParam(_) => CliError::Config(e.to_string()),
            E::Io(_) | E::MalformedHeader(_) | E::TruncatedPayload { .. } => {
                CliError::Io(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
