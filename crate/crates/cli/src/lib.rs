//! Command-line front end and HTTP session service.

pub mod commands;
pub mod line;
pub mod server;

use autotrain_core::Error;
use serde::{Deserialize, Serialize};

/// Error body shared by line mode and HTTP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

impl ErrorBody {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            error_code: code.to_string(),
            message: message.into(),
            stage: None,
        }
    }
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        Self {
            error_code: e.code().to_string(),
            message: e.root().to_string(),
            stage: e.stage().map(str::to_string),
        }
    }
}
