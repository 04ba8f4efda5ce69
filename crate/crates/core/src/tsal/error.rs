use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable error and violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Code {
    SyntaxError,
    UnknownType,
    UnknownPredicate,
    UnknownFunction,
    UnknownObject,
    ArityMismatch,
    TypeMismatch,
    DuplicateName,
    NameClash,
    TypeCycle,
    UnboundVar,
    DuplicateUpdate,
    UninitializedFluent,
    NonFiniteValue,
    DomainMismatch,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::SyntaxError => "SYNTAX_ERROR",
            Code::UnknownType => "UNKNOWN_TYPE",
            Code::UnknownPredicate => "UNKNOWN_PREDICATE",
            Code::UnknownFunction => "UNKNOWN_FUNCTION",
            Code::UnknownObject => "UNKNOWN_OBJECT",
            Code::ArityMismatch => "ARITY_MISMATCH",
            Code::TypeMismatch => "TYPE_MISMATCH",
            Code::DuplicateName => "DUPLICATE_NAME",
            Code::NameClash => "NAME_CLASH",
            Code::TypeCycle => "TYPE_CYCLE",
            Code::UnboundVar => "UNBOUND_VAR",
            Code::DuplicateUpdate => "DUPLICATE_UPDATE",
            Code::UninitializedFluent => "UNINITIALIZED_FLUENT",
            Code::NonFiniteValue => "NON_FINITE_VALUE",
            Code::DomainMismatch => "DOMAIN_MISMATCH",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A semantic problem found in a model, addressed by a slash-separated path
/// such as `action/roll-move/precondition`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: Code,
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(code: Code, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: expected {}, found {found}", expected.join(" or "))]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {0}")]
    Syntax(SyntaxError),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Semantic(Vec<Violation>),
}

impl ParseError {
    /// Code of the first reported problem.
    pub fn code(&self) -> Code {
        match self {
            ParseError::Syntax(_) => Code::SyntaxError,
            ParseError::Semantic(v) => v.first().map(|v| v.code).unwrap_or(Code::SyntaxError),
        }
    }

    pub fn codes(&self) -> Vec<Code> {
        match self {
            ParseError::Syntax(_) => vec![Code::SyntaxError],
            ParseError::Semantic(v) => v.iter().map(|v| v.code).collect(),
        }
    }
}

impl From<SyntaxError> for ParseError {
    fn from(e: SyntaxError) -> Self {
        ParseError::Syntax(e)
    }
}
