use std::path::PathBuf;

/// Errors raised by the boosting routines and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A column is perfectly (mis)classified and no smoothing was configured.
    #[error("unbounded alpha at coordinate {coordinate}: W+ = {w_plus}, W- = {w_minus}")]
    UnboundedAlpha {
        coordinate: usize,
        w_plus: f64,
        w_minus: f64,
    },

    #[error("division by zero at coordinate {coordinate}")]
    DivisionByZero { coordinate: usize },

    #[error("numeric overflow at coordinate {coordinate}: {value}")]
    NumericOverflow { coordinate: usize, value: f64 },

    #[error("example {index}: {source}")]
    AtExample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("weak learner returned no hypothesis in round {round}")]
    SelectionFailure { round: usize },

    #[error("normalization undefined: {0} has zero L1 norm")]
    UndefinedNormalization(&'static str),

    #[error("AUC undefined: scores contain only one class")]
    UndefinedAuc,

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("unknown CSV schema: expected columns {expected}")]
    UnknownSchema { expected: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtExample { source, .. } | Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::InvalidConfig(_) => 1,
            Error::UnboundedAlpha { .. }
            | Error::DivisionByZero { .. }
            | Error::NumericOverflow { .. }
            | Error::UndefinedNormalization(_)
            | Error::UndefinedAuc
            | Error::SelectionFailure { .. } => 3,
            _ => 2,
        }
    }
}
