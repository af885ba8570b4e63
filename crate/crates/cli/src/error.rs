use thiserror::Error;

use crate::config::Diagnostic;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("invalid configuration:\n{}", format_diagnostics(.0))]
    Config(Vec<Diagnostic>),

    #[error("job {index} (feature `{feature}`, G = {{{given}}}) failed: {source}")]
    Job {
        index: usize,
        feature: String,
        given: String,
        source: rfi_core::RfiError,
    },

    #[error(transparent)]
    Core(#[from] rfi_core::RfiError),
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for failures while
    /// running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Config(_) => 2,
            CliError::Job { .. } | CliError::Core(_) => 3,
        }
    }
}
