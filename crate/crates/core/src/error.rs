use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {point:?} is outside the chart domain or on its singular locus ({reason})")]
    Domain { point: Vec<f64>, reason: String },
    #[error("metric is not a valid Riemannian metric at {point:?}: {reason}")]
    Metric { point: Vec<f64>, reason: String },
    #[error("operator is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("sample set is empty")]
    EmptySamples,
    #[error("structure equations violated: {0}")]
    Structural(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid quadrature grid: {0}")]
    Grid(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
