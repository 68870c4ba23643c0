use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("deformation gradient is not invertible (det F = {det:e})")]
    NonInvertibleF { det: f64 },

    #[error("volume ratio must be positive, got J = {0:e}")]
    NonPositiveJ(f64),

    #[error("temperature must be positive, got {0:e}")]
    NonPositiveTemperature(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("model evaluation failed: {0}")]
    EvaluationFailed(String),

    #[error("steady-state conductivity is singular (det K = {det:e})")]
    SingularK { det: f64 },

    #[error("relaxation-time tensor is singular (det T = {det:e})")]
    SingularT { det: f64 },

    #[error("matrix is not a proper rotation (orthogonality defect {defect:e}, det {det})")]
    NotARotation { defect: f64, det: f64 },

    #[error("temperature became non-positive ({theta:e}) in cell {cell} at t = {time:e}")]
    NegativeTemperature { cell: usize, time: f64, theta: f64 },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("heat capacity ∂ε/∂θ = {value:e} is not positive in cell {cell} at t = {time:e}")]
    SingularHeatCapacity { cell: usize, time: f64, value: f64 },

    #[error("electrostatic solve did not converge: {0}")]
    ElectrostaticsFailed(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("I/O: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
}
