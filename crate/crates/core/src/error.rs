use thiserror::Error;

/// Configuration problems. All violated constraints are reported at once.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("interface not resolved: tanh width {width} exceeds domain length {length}")]
    InterfaceNotResolved { width: f64, length: f64 },
}

/// Failures of the time integrator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("non-finite state at t = {t} (cell {cell})")]
    NonFinite { t: f64, cell: usize },
    #[error("time step underflow at t = {t}: dt = {dt:e}")]
    DtUnderflow { t: f64, dt: f64 },
}

/// Failures of traveling-wave and heteroclinic computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("no traveling wave at v=0: the only orbit leaving the fixed point is homoclinic")]
    NoHeteroclinic,
    #[error("branch/speed mismatch: {0}")]
    BranchMismatch(String),
    #[error("point is not a fixed point (residual {residual:e})")]
    NotFixedPoint { residual: f64 },
    #[error("point is off the invariant manifold {manifold} (defect {defect:e})")]
    OffManifold { manifold: String, defect: f64 },
    #[error("Newton did not converge after {iterations} iterations (best residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },
    #[error("sign consistency violated: min q1 = {min_q1:e}, max r1 = {max_r1:e} (branch frame)")]
    SignViolation { min_q1: f64, max_r1: f64 },
    #[error("boundary subspace dimensions do not match ({0})")]
    SubspaceDimension(String),
    #[error("terrace speed ordering violated: v1 = {v1} > v2 = {v2}")]
    SpeedOrdering { v1: f64, v2: f64 },
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error("invalid request: {0}")]
    Invalid(String),
}

/// Failures of post-processing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no front: level {level} never crossed")]
    NoFront { level: f64 },
    #[error("insufficient samples: {got} in fit window, need {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// Top-level error used by the CLI and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 1 for validation problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Solver(_) => "solver",
            Error::Wave(_) => "wave",
            Error::Analysis(_) => "analysis",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
