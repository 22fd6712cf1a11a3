use std::path::PathBuf;

use thiserror::Error;
use twowall::ErrorCategory;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid problem file {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{}", expression_message(.text, .position, .message))]
    Expression {
        text: String,
        position: Option<usize>,
        message: String,
    },

    #[error("invalid field file {path}: {message}")]
    FieldFile { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] twowall::Error),

    #[error("Picard iteration did not converge in {iterations} stages (last difference {last:e})")]
    PicardNotConverged { iterations: usize, last: f64 },

    #[error("solution failed the {clause} check: {value:e} exceeds {tolerance:e}")]
    CheckFailed {
        clause: &'static str,
        value: f64,
        tolerance: f64,
    },

    #[error("non-finite value in {file}, column {column}, row {row}")]
    NonFiniteOutput {
        file: &'static str,
        column: String,
        row: usize,
    },

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

fn expression_message(text: &str, position: &Option<usize>, message: &str) -> String {
    match position {
        Some(p) => format!("syntax error in expression {text:?} at position {p}: {message}"),
        None => format!("invalid expression {text:?}: {message}"),
    }
}

impl CliError {
    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config { .. } | CliError::Expression { .. } | CliError::FieldFile { .. } | CliError::Usage(_) => {
                "parse"
            }
            CliError::Io { .. } | CliError::Output { .. } => "io",
            CliError::PicardNotConverged { .. } => "convergence",
            CliError::CheckFailed { .. } => "validation",
            CliError::NonFiniteOutput { .. } => "numeric",
            CliError::Core(e) => match e.category() {
                ErrorCategory::Input | ErrorCategory::Validation => "validation",
                ErrorCategory::Convergence => "convergence",
                ErrorCategory::Internal => "internal",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "parse" => 2,
            "convergence" => 3,
            "validation" => 4,
            "numeric" => 5,
            _ => 1,
        }
    }
}
