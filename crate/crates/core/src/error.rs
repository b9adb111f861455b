use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::harmonic::Kernel;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site {site:?} lies outside the torus (-{half_side}, {half_side}]^d")]
    SiteOutOfRange { site: Vec<i64>, half_side: u32 },

    #[error("operands live on different lattice geometries")]
    GeometryMismatch,

    #[error("operation requires a {expected} geometry")]
    WrongGeometry { expected: &'static str },

    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),

    #[error("dispersion vanishes at k = {k:?}; Bogoliubov multipliers are singular there")]
    SingularMultiplier { k: Vec<f64> },

    #[error(
        "quadrature for m = {m}, t = {t} did not reach tolerance {tolerance:e} after {refinements} \
         refinements (achieved {achieved:e})"
    )]
    QuadratureNotConverged {
        m: i8,
        t: f64,
        tolerance: f64,
        achieved: f64,
        refinements: u32,
        best: Box<Kernel>,
    },

    #[error("propagator window {max_window} is too small; tolerance needs at least {required}")]
    WindowTooSmall { required: u32, max_window: u32 },

    #[error(
        "label is outside the massless domain: position part has mean {mean:e} \
         (zero mode of a gapless dispersion)"
    )]
    ZeroModeViolation { mean: f64 },

    #[error("no admissible mu for a = {a}: {constraint}")]
    NoAdmissibleMu { a: f64, constraint: &'static str },

    #[error("family contains the multi-site support {support:?}; use pair_moment instead")]
    NonSingletonSupport { support: Vec<Vec<i64>> },

    #[error("support site {site:?} is not in the perturbation volume")]
    SiteOutsideVolume { site: Vec<i64> },

    #[error("atom set for support {support:?} is not even under z -> -z")]
    OddMeasure { support: Vec<Vec<i64>> },

    #[error("volume index n = {n} is smaller than m = {m}")]
    VolumeOrder { n: usize, m: usize },

    #[error("index {index} out of range for a sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("cone scan has {found} time slices with a front crossing, need at least 3")]
    NoCrossings { found: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
