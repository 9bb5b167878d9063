use std::fmt;

use thiserror::Error;

/// One violated constraint on an input record.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub constraint: String,
    pub value: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: must satisfy {} (got {})", self.field, self.constraint, self.value)
    }
}

/// Every constraint a record violates, collected in field order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub(crate) fn check(&mut self, ok: bool, field: &str, constraint: &str, value: impl fmt::Display) {
        if !ok {
            self.violations.push(Violation {
                field: field.to_string(),
                constraint: constraint.to_string(),
                value: value.to_string(),
            });
        }
    }

    pub(crate) fn into_result(self) -> std::result::Result<(), ValidationError> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(#[from] ValidationError),

    #[error("invalid argument `{field}`: {message}")]
    InvalidArgument { field: &'static str, message: String },

    #[error("tridiagonal solve broke down at row {row}")]
    Singular { row: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("signal fields inconsistent with density: {0}")]
    Inconsistent(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub(crate) fn arg(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
