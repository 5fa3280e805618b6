use std::path::PathBuf;

/// Errors raised anywhere in the model, solvers or scenario runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in `{field}`")]
    NonFinite { field: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("control u{index} = {value} lies outside [0, {bound}]")]
    ControlOutOfBounds { index: usize, value: f64, bound: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("trajectory grid does not match the requested grid: {0}")]
    GridMismatch(String),

    #[error("integration produced a non-finite `{component}` at step {step}")]
    IntegrationBlowup { step: usize, component: String },

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("eigenvalue {value} failed the residual check (sigma_min = {residual:e})")]
    EigenResidual { value: String, residual: f64 },

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonNoConvergence { iterations: usize, residual: f64 },

    #[error("newton converged to a non-physical root with {compartment} = {value}")]
    NonPhysicalRoot { compartment: String, value: f64 },

    #[error("forward-backward sweep diverged at iteration {iteration} (objective {objective:e})")]
    SweepDiverged { iteration: usize, objective: f64 },

    #[error("{path}:{line}: {message}")]
    ConfigParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: unknown key `{key}`")]
    UnknownKey { path: PathBuf, key: String },

    #[error("unknown sweep key `{key}`; valid keys: {}", valid.join(", "))]
    UnknownSweepKey { key: String, valid: Vec<String> },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("output directory {path} is not writable: {source}")]
    OutputNotWritable { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse { .. }
            | Error::UnknownKey { .. }
            | Error::UnknownSweepKey { .. }
            | Error::UnknownScenario(_)
            | Error::OutputNotWritable { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidParameter { .. }
            | Error::ControlOutOfBounds { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::NonFinite { .. }
            | Error::GridMismatch(_)
            | Error::IntegrationBlowup { .. }
            | Error::Singular(_)
            | Error::EigenNoConvergence
            | Error::EigenResidual { .. }
            | Error::NewtonNoConvergence { .. }
            | Error::NonPhysicalRoot { .. }
            | Error::SweepDiverged { .. } => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
