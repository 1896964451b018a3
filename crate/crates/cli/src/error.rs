use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),

    #[error("malformed config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] deconv_core::Error),
}

#[derive(Debug, Serialize)]
pub struct ErrorDoc<'a> {
    pub error: &'a str,
    pub message: String,
    pub exit_code: i32,
}

impl AppError {
    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Usage(_) => "usage",
            AppError::Config(_) => "config",
            AppError::Core(e) => e.kind(),
        }
    }

    /// 2 for bad invocations and unreadable or malformed inputs, 1 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        use deconv_core::Error as E;
        match self {
            AppError::Usage(_) | AppError::Config(_) => 2,
            AppError::Core(E::InvalidInput(_) | E::Csv(_) | E::Json(_) | E::Io(_)) => 2,
            AppError::Core(_) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ErrorDoc {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        };
        serde_json::to_string(&doc).expect("serializable")
    }
}
