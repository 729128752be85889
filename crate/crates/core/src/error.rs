use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("metric axiom violated: triangle inequality fails for triple ({0},{1},{2}): d({0},{2}) = {3} > d({0},{1}) + d({1},{2}) = {4}")]
    Triangle(usize, usize, usize, f64, f64),

    #[error("metric axiom violated: d({0},{1}) = {2} but d({1},{0}) = {3}")]
    Asymmetric(usize, usize, f64, f64),

    #[error("metric axiom violated: d({0},{0}) = {1} is not zero")]
    NonzeroDiagonal(usize, f64),

    #[error("metric axiom violated: d({0},{1}) = {2} must be positive for distinct points")]
    NonpositiveDistance(usize, usize, f64),

    #[error("nonpositive weight {weight} at point {id}")]
    NonpositiveWeight { id: String, weight: f64 },

    #[error("unknown point {0}")]
    UnknownPoint(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("filling graph is disconnected ({0} components)")]
    Disconnected(usize),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
