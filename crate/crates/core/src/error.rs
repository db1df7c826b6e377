use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Reasons an IDS expression fails to parse. Offsets are byte offsets into
/// the expression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdsError {
    #[error("empty IDS expression")]
    EmptyInput,
    #[error("operator {op} at offset {offset} takes {expected} operands, found {found}")]
    Arity {
        op: char,
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("unexpected input {rest:?} after complete expression at offset {offset}")]
    TrailingInput { offset: usize, rest: String },
    #[error("unknown token {token:?} at offset {offset}")]
    UnknownToken { token: String, offset: usize },
}

impl IdsError {
    /// Stable name used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            IdsError::EmptyInput => "EmptyInput",
            IdsError::Arity { .. } => "ArityError",
            IdsError::TrailingInput { .. } => "TrailingInput",
            IdsError::UnknownToken { .. } => "UnknownToken",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ids(#[from] IdsError),
    #[error("{0:?} has no decomposition")]
    NotDecomposable(char),
    #[error("line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("base form table has a cycle through {0:?}")]
    CyclicBaseForms(char),
    #[error("invalid scheme configuration: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    BpeModel { line: usize, message: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("source and target have different line counts ({src} vs {tgt})")]
    Misaligned { src: usize, tgt: usize },
    #[error(transparent)]
    Audit(#[from] crate::testset::AuditFailure),
}
