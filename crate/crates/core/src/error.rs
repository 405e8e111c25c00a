use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dense dimension {dim} exceeds the configured cap of {cap}")]
    DenseCap { dim: usize, cap: usize },

    #[error("invalid qubit set: {0}")]
    QubitSet(String),

    #[error("non-finite matrix or vector entry")]
    NonFinite,

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("observable spectral norm {0} exceeds 1")]
    NormTooLarge(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("matrix is rank deficient at column {0}")]
    RankDeficient(usize),

    #[error("singular value iteration did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("invalid circuit layout: {0}")]
    Layout(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("model variant mismatch: expected {expected}, found {found}")]
    Variant {
        expected: &'static str,
        found: &'static str,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 3,
        }
    }
}
