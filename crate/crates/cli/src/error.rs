use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scenario: {0}")]
    Scenario(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] platoon_risk::Error),
}

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Serialize)]
struct Diagnostic<'a> {
    level: &'static str,
    kind: &'static str,
    exit_code: i32,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<&'a platoon_risk::StabilityVerdict>,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => EXIT_NUMERIC,
            _ => EXIT_VALIDATION,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Scenario(_) => "scenario",
            CliError::Io { .. } => "io",
            CliError::Core(e) if e.is_numeric() => "numeric",
            CliError::Core(_) => "validation",
        }
    }

    /// One JSON object for stderr.
    pub fn diagnostic(&self) -> String {
        let detail = match self {
            CliError::Core(platoon_risk::Error::Unstable(v)) => Some(v.as_ref()),
            _ => None,
        };
        let d = Diagnostic {
            level: "error",
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            detail,
        };
        serde_json::to_string(&d).expect("diagnostic serialises")
    }
}
