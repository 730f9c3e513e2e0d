use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage an error was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    ChangedNodes,
    SourceNodes,
    SourceSets,
    Classes,
    Parents,
    Orientation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::ChangedNodes => "changed-node detection",
            Stage::SourceNodes => "source-node identification",
            Stage::SourceSets => "source ancestral sets",
            Stage::Classes => "equivalence-class processing",
            Stage::Parents => "parent finding",
            Stage::Orientation => "cross-class orientation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge set contains a directed cycle through node {0}")]
    CycleDetected(usize),
    #[error("node index {index} out of range for a graph with {p} nodes")]
    IndexOutOfRange { index: usize, p: usize },
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("intervention target {index} out of range for a graph with {p} nodes")]
    TargetOutOfRange { index: usize, p: usize },
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),
    #[error("principal submatrix on nodes {0:?} is numerically singular")]
    SingularSubmatrix(Vec<usize>),
    #[error("problem too large: size {size} exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in input: {0}")]
    NonFiniteInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty node subset")]
    EmptySubset,
    #[error("the support block of the Kronecker matrix is singular")]
    SingularGammaBlock,
    #[error("equivalence class of size {size} exceeds the budget of {budget}")]
    ClassTooLarge { size: usize, budget: usize },
    #[error("class cache is missing the estimate for subset {0:?}")]
    CacheIncomplete(Vec<usize>),
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("ragged rows: row {row} has {found} fields, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric cell {value:?} at row {row}, column {column}")]
    NonNumericCell {
        row: usize,
        column: usize,
        value: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Strips stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by malformed or inconsistent user data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self.root(),
            Error::CycleDetected(_)
                | Error::IndexOutOfRange { .. }
                | Error::DuplicateEdge(..)
                | Error::SelfLoop(_)
                | Error::InvalidModel(_)
                | Error::TargetOutOfRange { .. }
                | Error::InvalidIntervention(_)
                | Error::DimensionMismatch(_)
                | Error::NonFiniteInput(_)
                | Error::Parse { .. }
                | Error::RaggedRows { .. }
                | Error::NonNumericCell { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
