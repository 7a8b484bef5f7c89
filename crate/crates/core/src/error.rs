use thiserror::Error;

/// Errors raised by the library. Variants name the failing contract.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no resolvent: {0}")]
    NoResolvent(String),

    #[error("point lies outside the closure of the operator domain (distance {distance:.3e})")]
    OutsideDomain { distance: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time grid invariant violated: {0}")]
    InvalidGrid(String),

    #[error("explicit Yosida scheme unstable: dt = {dt:.3e} exceeds alpha/2 = {limit:.3e}")]
    StabilityViolation { dt: f64, limit: f64 },

    #[error("test pair is not in the operator graph (residual {residual:.3e})")]
    NotInGraph { residual: f64 },

    #[error("optimizer diverged after {iterations} iterations (residual {residual:.3e})")]
    OptimizerDiverged { iterations: usize, residual: f64 },

    #[error("diffusion matrix is singular along the path")]
    SingularDiffusion,

    #[error("path leaves the interior of the domain at node {node}")]
    NotInterior { node: usize },

    #[error("eta must lie in (0, 1/e), got {0}")]
    BadEta(f64),

    #[error("g0 must lie in (0, 1), got {0}")]
    BadG0(f64),

    #[error("no Monte Carlo hits at epsilon = {0}")]
    ZeroHits(f64),

    #[error("horizon too short: need {needed}, have {available}")]
    HorizonTooShort { needed: f64, available: f64 },

    #[error("unsupported contraction system: {0}")]
    UnsupportedContraction(String),

    #[error("limit-set net is empty")]
    EmptyNet,

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("minimal section did not stabilise along the alpha schedule (spread {spread:.3e})")]
    MinimalSectionUnstable { spread: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status for the command-line front end: 2 for invalid
    /// input or configuration, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OptimizerDiverged { .. }
            | Error::ZeroHits(_)
            | Error::NotInGraph { .. }
            | Error::MinimalSectionUnstable { .. }
            | Error::SingularDiffusion
            | Error::EmptyNet => 3,
            _ => 2,
        }
    }
}
