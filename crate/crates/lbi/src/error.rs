use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lbi_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {detail}")]
    Parse { path: PathBuf, line: usize, detail: String },
    #[error("{path}: {detail}")]
    Format { path: PathBuf, detail: String },
    #[error("hypergradient check failed: max relative deviation {max_rel_dev:e} exceeds {tolerance:e}")]
    Tolerance { max_rel_dev: f64, tolerance: f64 },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                lbi_core::Error::Shape { .. } => "shape",
                lbi_core::Error::Contract(_) => "contract",
                lbi_core::Error::Config(_) => "config",
                lbi_core::Error::Data(_) => "data",
                lbi_core::Error::Numeric { .. } => "numeric",
                lbi_core::Error::Run { .. } => "run",
            },
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Format { .. } => "format",
            CliError::Tolerance { .. } => "tolerance",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Tolerance { .. } => 3,
            CliError::Parse { .. } | CliError::Format { .. } => 4,
            CliError::Io { .. } => 5,
            CliError::Core(_) => 2,
        }
    }

    /// One-line JSON for the error stream.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Doc { error: Body { kind: self.kind(), message: self.to_string() } })
            .expect("error document serializes")
    }
}
