use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: ttcd_core::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn solver(context: impl Into<String>, source: ttcd_core::Error) -> Self {
        Self::Solver {
            context: context.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Parse(_) => "config_parse",
            Self::Invalid { .. } => "config_invalid",
            Self::Solver { source, .. } => source.kind(),
            Self::Read { .. } => "io_read",
            Self::Write { .. } => "io_write",
            Self::Csv(_) => "io_csv",
            Self::Pool(_) => "thread_pool",
        }
    }

    /// Process exit status: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) | Self::Invalid { .. } | Self::Read { .. } => 2,
            _ => 1,
        }
    }

    /// Single-line JSON record for stderr.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            status: &'static str,
            kind: &'a str,
            message: String,
        }
        serde_json::to_string(&Line {
            status: "error",
            kind: self.kind(),
            message: self.to_string(),
        })
        .unwrap_or_else(|_| format!("{{\"status\":\"error\",\"kind\":\"{}\"}}", self.kind()))
    }
}
