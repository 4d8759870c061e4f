use crate::grid::GridCoord;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate ({}, {}) is outside the {width}x{height} grid", .coord.x, .coord.y)]
    OutOfBounds {
        coord: GridCoord,
        width: usize,
        height: usize,
    },

    #[error("invalid rectangle: {0}")]
    InvalidRect(String),

    #[error("invalid hierarchy configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("simulation integrity violated: {0}")]
    Simulation(String),

    #[error("value cannot be recovered: {0}")]
    Unrecoverable(String),

    #[error("region is empty")]
    EmptyRegion,

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("unknown name: {0}")]
    Unresolved(String),

    #[error("i/o error: {0}")]
    Io(String),
}
