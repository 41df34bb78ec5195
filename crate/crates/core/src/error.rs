use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: non-triangle face with {count} vertices")]
    NonTriangleFace { line: usize, count: usize },

    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },

    #[error("face {face} is degenerate (zero area)")]
    DegenerateFace { face: usize },

    #[error("vertex {vertex} has no well-defined normal")]
    DegenerateNormal { vertex: usize },

    #[error("mesh is disconnected: {components} components")]
    DisconnectedMesh { components: usize },

    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("invalid surface parameters: {0}")]
    InvalidSurface(String),

    #[error("invalid robot model: {0}")]
    InvalidChain(String),

    #[error("expected {expected} joint values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph already has a dummy node")]
    DummyAlreadyPresent,

    #[error("tour does not contain the dummy node")]
    DummyMissing,

    #[error("target {target} has no IK solutions")]
    EmptySampleSet { target: usize },

    #[error("unreachable targets: {targets:?}")]
    Unreachable { targets: Vec<usize> },

    #[error("no feasible tour found: {0}")]
    Infeasible(String),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
