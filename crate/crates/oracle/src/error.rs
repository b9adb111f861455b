use thiserror::Error;

pub type Result<T, E = OracleError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Core(#[from] lrlattice_core::Error),

    #[error("invalid oracle configuration `{name}`: {reason}")]
    InvalidConfig { name: &'static str, reason: String },

    #[error("Fock space dimension {dim} exceeds the limit {limit}")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("operator dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site {site:?} is not one of the {sites} oracle sites")]
    SiteNotInVolume { site: Vec<i64>, sites: usize },

    #[error("truncation leakage {leakage:e} exceeds {limit:e}; raise the cutoff or shrink the label")]
    Leakage { leakage: f64, limit: f64 },

    #[error("operator is not self-adjoint (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dense linear algebra failed: {0}")]
    Decomposition(String),
}

impl OracleError {
    pub(crate) fn config(name: &'static str, reason: impl Into<String>) -> Self {
        OracleError::InvalidConfig {
            name,
            reason: reason.into(),
        }
    }
}
