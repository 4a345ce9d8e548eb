use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead { path: PathBuf, source: std::io::Error },

    #[error("bad config {path}: {source}")]
    ConfigParse { path: PathBuf, source: toml::de::Error },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] windfreq_core::Error),
}

impl CliError {
    /// 2 for configuration and input problems, 3 for simulation divergence,
    /// 1 for anything else.
    pub fn exit_code(&self) -> ExitCode {
        use windfreq_core::Error as E;
        let code = match self {
            CliError::ConfigRead { .. } | CliError::ConfigParse { .. } | CliError::Config(_) => 2,
            CliError::Core(e) if e.is_divergence() => 3,
            CliError::Core(
                E::InvalidParameter(_)
                | E::Domain(_)
                | E::Dimension(_)
                | E::ModelFormat { .. }
                | E::InsufficientData(_),
            ) => 2,
            CliError::Output { .. } | CliError::Core(_) => 1,
        };
        ExitCode::from(code)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Wraps an output-side I/O failure with its path.
pub fn output_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output { path: path.to_path_buf(), source }
}
