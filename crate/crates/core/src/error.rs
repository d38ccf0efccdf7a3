use thiserror::Error;

/// Source position of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("ambiguous column reference `{0}`")]
    AmbiguousColumn(String),

    #[error("duplicate alias `{0}` in one scope")]
    DuplicateAlias(String),

    #[error("constraint references missing attribute: {0}")]
    ConstraintResolution(String),

    #[error("ill-formed query: {0}")]
    IllFormed(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("unsupported feature `{feature}`{}", location.as_deref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Unsupported {
        feature: String,
        location: Option<String>,
    },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("enumeration cutoff exceeded (cap {0})")]
    Exhausted(usize),

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("invalid problem file: {0}")]
    Problem(String),

    #[error("internal invariant violation: {0}")]
    Internal(String),
}

impl Error {
    pub fn unsupported(feature: impl Into<String>) -> Self {
        Error::Unsupported {
            feature: feature.into(),
            location: None,
        }
    }

    pub fn unsupported_at(feature: impl Into<String>, loc: impl Into<String>) -> Self {
        Error::Unsupported {
            feature: feature.into(),
            location: Some(loc.into()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
