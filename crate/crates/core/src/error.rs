use thiserror::Error;

/// Failures while building or querying a tube geometry.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("tube folds into itself: max |R·κ| = {max_eta} at s = {at}")]
    FoldedTube { max_eta: f64, at: f64 },
    #[error("control end violation: {quantity} = {value:e} exceeds tolerance")]
    ControlEndViolation { quantity: &'static str, value: f64 },
    #[error("radius must be positive: min R = {min_radius} at s = {at}")]
    NonPositiveRadius { min_radius: f64, at: f64 },
    #[error("point (s = {s}, r = {r}) lies outside the tube (R = {radius})")]
    OutOfTube { s: f64, r: f64, radius: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid physical parameter: {0}")]
    InvalidParameter(String),
}

/// Failures inside the time steppers and linear algebra.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("mass matrix is singular: A = {area} at node {node}")]
    SingularMass { area: f64, node: usize },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("invalid time step dt = {0}")]
    InvalidTimeStep(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

/// Failures of the certificate evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifierError {
    #[error("power iteration for {name} did not converge after {iterations} iterations")]
    NoConvergence { name: &'static str, iterations: usize },
    #[error("field history missing: {0}")]
    MissingHistory(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Top-level error used by the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("assumption violated: {0}")]
    Assumption(#[from] GeometryError),
    #[error("solver failure in scenario `{scenario}`: {source}")]
    Solver {
        scenario: String,
        #[source]
        source: SolverError,
    },
    #[error("certificate failure in scenario `{scenario}`: {source}")]
    Certifier {
        scenario: String,
        #[source]
        source: CertifierError,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code associated with the error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Assumption(_) => 3,
            Error::Solver { .. } | Error::Certifier { .. } | Error::Io { .. } => 4,
        }
    }
}
