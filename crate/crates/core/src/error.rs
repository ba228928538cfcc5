use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("task id {task} out of range for an environment with {count} tasks")]
    TaskOutOfRange { task: usize, count: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rational grid overflow: denominator {denominator} exceeds bound {bound}")]
    GridOverflow { denominator: i128, bound: i64 },

    #[error("negative information input: {0}")]
    NegativeInformation(f64),

    #[error("value is outside the support of the conditional law (probability-zero event)")]
    OutsideSupport,

    #[error("learner does not expose a finite-support output law: {0}")]
    NonFiniteSupport(String),

    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("plot: {0}")]
    Plot(String),
}
