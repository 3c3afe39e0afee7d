use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid composition: {0}")]
    InvalidComposition(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero part where strictly positive parts are required: part {index}")]
    ZeroPart { index: usize },
    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),
    #[error("invalid sites: {0}")]
    InvalidSites(String),
    #[error("value {value} outside domain of generating function {phi}")]
    OutOfDomain { phi: String, value: f64 },
    #[error("image {value} outside range of generating function {phi}")]
    OutOfRange { phi: String, value: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid covariance model: {0}")]
    InvalidModel(String),
    #[error("singular covariance matrix: {0}")]
    SingularCovariance(String),
    #[error("solver failed: {0}")]
    SolverFailure(String),
    #[error("did not converge after {iterations} iterations (last objective {objective})")]
    NonConvergence { iterations: usize, objective: f64 },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
