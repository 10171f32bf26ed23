use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NonHermitian { defect: f64 },

    #[error("matrix is not unitary (defect {defect:e})")]
    NonUnitary { defect: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("state is not pure (purity {purity})")]
    NotPure { purity: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("map is not completely positive (min Choi eigenvalue {min_eig:e})")]
    NotCp { min_eig: f64 },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("post-selection probability {0:e} is too small")]
    VanishingProbability(f64),

    #[error("rank deficient: rank {rank} < required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("probability {0} outside the open interval (0, 1); hedge counts first")]
    InvalidProbability(f64),

    #[error("dataset is missing configuration {0}")]
    MissingConfiguration(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverNotConverged {
        iterations: usize,
        residual: f64,
        best: Option<BestIterate>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Best point a solver reached before giving up.
#[derive(Clone, PartialEq)]
pub struct BestIterate(pub Box<crate::qmat::CMatrix<f64>>);

impl std::fmt::Debug for BestIterate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BestIterate({}x{})", self.0.rows(), self.0.cols())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
