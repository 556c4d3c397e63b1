use std::path::Path;

use serde_json::json;

pub const ERROR_SCHEMA: &str = "hdcca.error/1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hdcca::Error),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn parse(path: &Path, line: u64, message: String) -> Self {
        Self::Parse { path: path.display().to_string(), line, message }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Self::io(path, source),
            kind => Self::parse(path, line, format!("{kind:?}")),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Self::Core(e) => e.code(),
            Self::Parse { .. } => "ParseError",
            Self::Io { .. } => "IoError",
            Self::Usage(_) => "UsageError",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "schema": ERROR_SCHEMA, "code": self.code(), "message": self.to_string() });
        if let Self::Parse { line, .. } = self {
            v["line"] = json!(line);
        }
        v
    }
}
