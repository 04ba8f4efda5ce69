use crate::tsal::Violation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("INVALID_TARGET: {0}")]
    InvalidTarget(String),
    #[error("INVALID_PARAMS: {0}")]
    InvalidParams(String),
    #[error("VALIDATION_FAILED: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<Violation>),
    #[error("NO_APPLICABLE_KIND: no weighted kind produced a transformation")]
    NoApplicableKind,
    #[error("INVALID_OVERRIDE: {message} (valid keys: {})", valid.join(", "))]
    InvalidOverride { message: String, valid: Vec<String> },
    #[error("CONFIG_ERROR: {0}")]
    Config(String),
}

impl TransformError {
    pub fn code(&self) -> &'static str {
        match self {
            TransformError::InvalidTarget(_) => "INVALID_TARGET",
            TransformError::InvalidParams(_) => "INVALID_PARAMS",
            TransformError::ValidationFailed(_) => "VALIDATION_FAILED",
            TransformError::NoApplicableKind => "NO_APPLICABLE_KIND",
            TransformError::InvalidOverride { .. } => "INVALID_OVERRIDE",
            TransformError::Config(_) => "CONFIG_ERROR",
        }
    }
}
