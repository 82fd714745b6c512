use std::path::PathBuf;

use thiserror::Error;

use crate::submap_graph::SubmapId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("occupancy probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("cell array has {actual} entries, expected {width}x{height}")]
    GridShape {
        width: usize,
        height: usize,
        actual: usize,
    },

    #[error("resolution must be positive, got {0}")]
    InvalidResolution(f64),

    #[error("frontier seed ({x}, {y}) is outside the grid")]
    SeedOutOfBounds { x: i64, y: i64 },

    #[error("frontier seed ({x}, {y}) is not a free cell; the robot cannot stand there")]
    SeedNotFree { x: u32, y: u32 },

    #[error("unknown submap {0}")]
    UnknownSubmap(SubmapId),

    #[error("submap {0} is not finished")]
    SubmapNotFinished(SubmapId),

    #[error("submap {0} is already finished")]
    SubmapFinished(SubmapId),

    #[error("point ({x:.3}, {y:.3}) lies outside the map")]
    OffGrid { x: f64, y: f64 },

    #[error("baseline total is zero; performance ratio undefined")]
    ZeroBaseline,

    #[error("round count mismatch: {a} vs {b}")]
    RoundCountMismatch { a: usize, b: usize },

    #[error("robot pose ({x:.3}, {y:.3}) is inside an obstacle")]
    PoseInObstacle { x: f64, y: f64 },

    #[error("invalid PGM: {0}")]
    InvalidPgm(String),

    #[error("invalid world: {0}")]
    InvalidWorld(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corrupt exploration log: {0}")]
    CorruptLog(String),

    #[error("exploration made no progress for {rounds} rounds")]
    NoProgress { rounds: usize },

    #[error("exploration exceeded {ticks} ticks without finishing")]
    TickBudgetExceeded { ticks: u64 },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidArgument(_)
                | Error::InvalidPgm(_)
                | Error::InvalidWorld(_)
                | Error::CorruptLog(_)
        )
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
