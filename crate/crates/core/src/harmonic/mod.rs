//! Dispersion, Bogoliubov multipliers, propagator kernels and the symplectic
//! flow `T_t` of the harmonic lattice.

mod kernel;
mod params;
mod propagator;
mod torus;

pub use kernel::{compute_kernel, Kernel, KernelOrder, KernelTriple, QuadratureSpec};
pub use params::{BogoliubovMultipliers, HarmonicParameters};
pub use propagator::{
    apply_propagator_convolution, certified_window, evolve_convolution, HarmonicDynamics,
    PropagatorSpec, WindowCertificate,
};
pub use torus::{apply_propagator_torus, TorusModes, ZERO_MODE_TOLERANCE};
