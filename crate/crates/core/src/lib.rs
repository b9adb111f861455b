//! Harmonic lattice dynamics on Z^d and its tori: symplectic propagators,
//! Weyl-operator algebra, the quasi-free vacuum, Lieb-Robinson constants and
//! perturbation moment bounds.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
// `num_traits::Float` supplies libm-backed math without std. Dev-dependencies
// switch on num-traits' `std` feature, which leaves those imports unused in
// test builds.
#![allow(unused_imports)]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod field;
pub mod harmonic;
pub mod lattice;
pub mod lieb_robinson;
pub mod perturbations;
pub mod sum;
pub mod weyl;

pub use error::{Error, Result};
pub use field::{symplectic_form, Field};
pub use harmonic::{HarmonicDynamics, HarmonicParameters, Kernel, KernelOrder, QuadratureSpec};
pub use lattice::{DecayProfile, GeometryMode, LatticeGeometry, Site};
pub use num_complex::Complex64;
