//! Run configuration, delimited-text inputs and outputs, and input validation.

mod config;
mod files;
mod validate;

use std::fmt;

use serde::Serialize;

pub use config::{InputPaths, LevelConfig, RunConfig};
pub use files::{read_release_csv, write_outputs, write_release_csv, OutputRow, NOISELESS_WATERMARK};
pub use validate::{validate_inputs, ValidatedBundle};

/// Failure categories; each maps to its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorClass {
    /// Unreadable or unwritable file.
    Io,
    /// Malformed or inconsistent configuration.
    Config,
    /// Missing columns, unparsable values, duplicate keys.
    Schema,
    /// Codes outside their allowed universe.
    Universe,
    /// References to entities or iterations that do not exist.
    Referential,
    /// Budgets that do not add up to the declared total.
    Budget,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Io => 3,
            ErrorClass::Config => 4,
            ErrorClass::Schema => 5,
            ErrorClass::Universe => 6,
            ErrorClass::Referential => 7,
            ErrorClass::Budget => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Io => "io",
            ErrorClass::Config => "config",
            ErrorClass::Schema => "schema",
            ErrorClass::Universe => "universe",
            ErrorClass::Referential => "referential",
            ErrorClass::Budget => "budget",
        }
    }
}

/// One validation failure, located by file, line and field where known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputError {
    pub class: ErrorClass,
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl InputError {
    pub fn new(class: ErrorClass, file: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            class,
            file: file.into(),
            line: None,
            field: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, line: u64) -> Self {
        self.line = Some(line);
        self
    }

    pub fn field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.class.name(), self.file)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, " `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Every failure found in one validation pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<InputError>,
}

impl ValidationReport {
    /// Exit code of the first failure.
    pub fn exit_code(&self) -> i32 {
        self.errors.first().map_or(1, |e| e.class.exit_code())
    }

    pub fn has_class(&self, class: ErrorClass) -> bool {
        self.errors.iter().any(|e| e.class == class)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} validation failure(s)", self.errors.len())?;
        for e in &self.errors {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

impl From<InputError> for ValidationReport {
    fn from(e: InputError) -> Self {
        Self { errors: vec![e] }
    }
}
