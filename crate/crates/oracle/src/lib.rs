//! Exact-diagonalization oracle on one to three truncated oscillators.
//!
//! Operators are dense matrices on `(C^{N+1})^{(x) n}`. Norms that would be
//! dominated by states near the cutoff are measured on a probe subspace of
//! low total boson number (see [`FockConfig::with_probe`]).

mod config;
mod error;
mod hamiltonian;
mod interaction;
mod local;
mod model;
mod operator;
mod report;
mod spectrum;
mod weyl;

pub use config::{
    Boundary, FockConfig, DEFAULT_PROBE, LEAKAGE_LIMIT, LEAKAGE_MARGIN, MAX_DIMENSION, MAX_SITES,
};
pub use error::{OracleError, Result};
pub use hamiltonian::{build_hamiltonian, build_site_operators, SiteOperators};
pub use interaction::{interaction_norm_a, BoundedInteraction};
pub use local::{apply_embedded, embed, lowering, momentum, position, site_weyl};
pub use model::{
    commutator_oracle, heisenberg_evolve, perturbation_matrix, perturbed_evolve, probe_basis,
    volume_compare, Coupling, DysonCheck, FockModel, PerturbedEvolution, VolumeComparison,
};
pub use operator::{spectral_norm, DenseOperator, Hermitian, Unitary};
pub use report::{commutator_study, ConfigSummary, CutoffPoint, OracleReport};
pub use spectrum::Spectrum;
pub use weyl::{weyl_matrix, WeylFactors};

pub use faer::{c64, Mat, MatRef};

/// Caps the threads used by dense linear algebra; `1` runs sequentially.
pub fn set_threads(threads: usize) {
    let par = if threads <= 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(threads)
    };
    faer::set_global_parallelism(par);
}
