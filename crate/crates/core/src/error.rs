use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("under-resolved: {what} needs a finer grid ({hint})")]
    UnderResolved { what: String, hint: String },

    #[error("envelope overflow: {0} does not fit on the grid")]
    EnvelopeOverflow(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shifted meter support leaves the grid: needs [{needed_min:.4}, {needed_max:.4}], grid is [{grid_min:.4}, {grid_max:.4}]")]
    ShiftOverflow {
        needed_min: f64,
        needed_max: f64,
        grid_min: f64,
        grid_max: f64,
    },

    #[error("outcome x_m = {outcome} has probability density {density:e}, below the conditioning floor")]
    OutcomeTooRare { outcome: f64, density: f64 },

    #[error("normalization drifted to {0}")]
    NormalizationDrift(f64),

    #[error("Fock truncation leakage {leakage:e} exceeds {limit:e}")]
    TruncationLeakage { leakage: f64, limit: f64 },

    #[error("tomography needs at least {required} phases spanning [0, π), got {got}")]
    TooFewPhases { required: usize, got: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed data: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
