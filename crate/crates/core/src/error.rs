use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("grid error: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow guard: {0}")]
    Overflow(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("solvability violated: {0}")]
    Solvability(String),
    #[error("at d={d}, w={w}: {source}")]
    AtNode {
        d: f64,
        w: f64,
        #[source]
        source: Box<CoreError>,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
