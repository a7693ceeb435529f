use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
///
/// Variable and pivot indices are 0-based; line numbers in parse errors are 1-based.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("column {0} has zero empirical variance")]
    ConstantColumn(usize),
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver did not converge after {0} sweeps")]
    MaxIterations(usize),
    #[error("lasso solution is not unique at lambda = 0 with {allowed} predictors and n = {n}")]
    NotUnique { allowed: usize, n: usize },
    #[error("invalid penalty grid: {0}")]
    Grid(String),
    #[error("fold too small: n = {n} with {folds} folds")]
    FoldTooSmall { n: usize, folds: usize },
    #[error("inconsistent node count: expected {expected}, got {got}")]
    InconsistentP { expected: usize, got: usize },
    #[error("empty path")]
    EmptyPath,
    #[error("maximum likelihood estimate does not exist: {0}")]
    MleDoesNotExist(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("ragged row at line {0}")]
    RaggedRow(usize),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("estimation failed for {} node(s); first: node {}: {}", .0.len(), .0[0].0, .0[0].1)]
    Nodes(Vec<(usize, Error)>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Grid(_) | Error::FoldTooSmall { .. } => 2,
            Error::ConstantColumn(_)
            | Error::Parse { .. }
            | Error::RaggedRow(_)
            | Error::Io(_)
            | Error::InconsistentP { .. }
            | Error::EmptyPath => 3,
            Error::NotPositiveDefinite(_)
            | Error::MaxIterations(_)
            | Error::NotUnique { .. }
            | Error::MleDoesNotExist(_) => 4,
            Error::Nodes(errs) => errs.first().map_or(4, |(_, e)| e.exit_code()),
        }
    }
}
