use thiserror::Error;

/// Errors raised while building geometry, assembling or solving.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh input: {0}")]
    InvalidMesh(String),
    #[error("face ({0}, {1}) is shared by more than two elements")]
    NonManifoldFace(usize, usize),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("degenerate surface segment in element {element} (length {length:e})")]
    DegenerateSegment { element: usize, length: f64 },
    #[error("structural error: {0}")]
    Structural(String),
    #[error("point ({0}, {1}) lies outside the tubular neighborhood of the surface")]
    OutsideTubularNeighborhood(f64, f64),
    #[error("quadrature of degree {0} is not available")]
    UnsupportedDegree(usize),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("matrix has no eigenvalue above the zero threshold")]
    DegenerateMatrix,
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("at least {needed} levels are required, got {got}")]
    InsufficientLevels { needed: usize, got: usize },
    #[error("EOC undefined for non-positive error {0:e}")]
    UndefinedEoc(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
