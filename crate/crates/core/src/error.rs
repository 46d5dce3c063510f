use thiserror::Error;

/// Broad failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Config,
    Numeric,
}

#[derive(Debug, Error)]
pub enum MemdError {
    #[error("empty class: {0}")]
    EmptyClass(String),

    #[error("invalid moment: {0}")]
    InvalidMoment(String),

    #[error("moment-matching solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("incompatible densities: {0}")]
    IncompatibleDensities(String),

    #[error("operation requires {expected} classes, got {got}")]
    WrongArity { expected: usize, got: usize },

    #[error("one-vs-all ranking requires complement-class marginals")]
    MissingComplementModels,

    #[error("exhaustive subset oracle limited to {max} features, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("K = {k} is invalid for {d} features")]
    InvalidK { k: usize, d: usize },

    #[error("vocabulary is empty after stop-word and frequency pruning")]
    EmptyVocabulary,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cannot split {n} instances into {k} folds")]
    InvalidFolds { n: usize, k: usize },

    #[error("could not draw a validation split containing every class after {attempts} attempts")]
    StratificationError { attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<MemdError>,
    },

    #[error("malformed model file: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MemdError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        MemdError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            MemdError::Parse { .. } | MemdError::Io(_) | MemdError::Model(_) => ErrorKind::Parse,
            MemdError::InvalidMoment(_)
            | MemdError::SolverDiverged { .. }
            | MemdError::IncompatibleDensities(_) => ErrorKind::Numeric,
            MemdError::Fold { source, .. } => source.kind(),
            _ => ErrorKind::Config,
        }
    }
}

pub type Result<T> = std::result::Result<T, MemdError>;
