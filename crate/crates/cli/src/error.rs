// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;

use serde::Serialize;

/// Failure of one invocation, carrying its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, inconsistent model spec, unusable input shape. Exit 2.
    Config(String),
    /// Unreadable or unwritable files, malformed input. Exit 3.
    Io(String),
    /// Singular or rank-deficient systems and similar. Exit 4.
    Numerical(String),
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    code: i32,
    message: &'a str,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Numerical(m) => m,
        }
    }

    /// Single-line JSON object for standard error.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&ErrorLine {
            error: self.kind(),
            code: self.exit_code(),
            message: self.message(),
        })
        .expect("error line serializes")
    }

    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<vibsysid::Error> for CliError {
    fn from(e: vibsysid::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_and_json() {
        let e = CliError::Config("order must be >= 1".into());
        assert_eq!(e.exit_code(), 2);
        assert_eq!(
            e.to_json_line(),
            r#"{"error":"config","code":2,"message":"order must be >= 1"}"#
        );
        let n: CliError = vibsysid::Error::Singular { index: 3 }.into();
        assert_eq!(n.exit_code(), 4);
        let c: CliError = vibsysid::Error::InvalidSpec("x".into()).into();
        assert_eq!(c.exit_code(), 2);
    }
}
