//! Command implementations and the editing service behind the `lumascape`
//! binary.

pub mod commands;
pub mod server;

use std::fmt;
use std::path::Path;

use lumascape_core::model::SchemaError;
use lumascape_core::pipeline::PipelineError;
use lumascape_core::stats::StatsError;

/// A failed command: the message for stderr and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    /// Wraps a document error, prefixing it with the file it came from.
    pub fn document(path: &Path, err: SchemaError) -> Self {
        let code = match err {
            SchemaError::Invalid(_) => EXIT_VALIDATION,
            _ => EXIT_INPUT,
        };
        let mut message = format!("{}: {err}", path.display());
        if let SchemaError::Invalid(violations) = &err {
            for v in violations {
                message.push_str(&format!("\n  {v}"));
            }
        }
        Self { code, message }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<PipelineError> for Failure {
    fn from(err: PipelineError) -> Self {
        let mut message = err.to_string();
        if let PipelineError::Validation(violations) = &err {
            for v in violations {
                message.push_str(&format!("\n  {v}"));
            }
        }
        Self {
            code: err.exit_code(),
            message,
        }
    }
}

impl From<StatsError> for Failure {
    fn from(err: StatsError) -> Self {
        Self::input(err.to_string())
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;
