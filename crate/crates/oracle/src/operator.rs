//! Dense matrices on the truncated Fock space.

use std::ops::Deref;

use faer::{c64, Mat, MatRef};

use crate::error::{OracleError, Result};

/// Square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    mat: Mat<c64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: Mat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: Mat::identity(dim, dim),
        }
    }

    pub fn from_mat(mat: Mat<c64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(OracleError::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        if !mat.as_ref().is_all_finite() {
            return Err(OracleError::NonFinite);
        }
        Ok(Self { mat })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Result<Self> {
        Self::from_mat(Mat::from_fn(dim, dim, f))
    }

    pub(crate) fn from_mat_unchecked(mat: Mat<c64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    fn check(&self, other: &DenseOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> DenseOperator {
        Self::from_mat_unchecked(self.mat.adjoint().to_owned())
    }

    pub fn add(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check(other)?;
        Ok(Self::from_mat_unchecked(&self.mat + &other.mat))
    }

    pub fn sub(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check(other)?;
        Ok(Self::from_mat_unchecked(&self.mat - &other.mat))
    }

    pub fn scale(&self, c: c64) -> DenseOperator {
        Self::from_mat_unchecked(Mat::from_fn(self.dim(), self.dim(), |i, j| {
            c * self.mat[(i, j)]
        }))
    }

    pub fn mul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check(other)?;
        Ok(Self::from_mat_unchecked(&self.mat * &other.mat))
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// `A (x) B`, with `A` acting on the more significant factor.
    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        let m = other.dim();
        Self::from_mat_unchecked(Mat::from_fn(self.dim() * m, self.dim() * m, |i, j| {
            self.mat[(i / m, j / m)] * other.mat[(i % m, j % m)]
        }))
    }

    /// Operator (spectral) norm.
    pub fn norm(&self) -> Result<f64> {
        spectral_norm(self.mat.as_ref())
    }

    /// `||A P||` with `P` the coordinate projector onto `columns`.
    pub fn norm_on(&self, columns: &[usize]) -> Result<f64> {
        let m = Mat::from_fn(self.dim(), columns.len(), |i, j| self.mat[(i, columns[j])]);
        spectral_norm(m.as_ref())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.mat.norm_max()
    }

    /// `max |A - A^*|` entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm_max()
    }

    /// `||A^* A - 1||`.
    pub fn unitarity_defect(&self) -> Result<f64> {
        let gram = self.mat.adjoint() * &self.mat;
        spectral_norm((gram - Mat::<c64>::identity(self.dim(), self.dim())).as_ref())
    }
}

/// Largest singular value.
pub fn spectral_norm(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let s = m
        .singular_values()
        .map_err(|e| OracleError::Decomposition(format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// A matrix that has been checked to be self-adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(DenseOperator);

impl Hermitian {
    /// Accepts `op` when `max |A - A^*| <= tol max |A|`, then symmetrizes.
    pub fn new(op: DenseOperator, tol: f64) -> Result<Self> {
        let defect = op.hermiticity_defect();
        if defect > tol * op.max_abs().max(f64::MIN_POSITIVE) {
            return Err(OracleError::NotHermitian { defect });
        }
        let n = op.dim();
        let m = Mat::from_fn(n, n, |i, j| (op.mat[(i, j)] + op.mat[(j, i)].conj()) * 0.5);
        Ok(Self(DenseOperator::from_mat_unchecked(m)))
    }

    pub(crate) fn new_unchecked(op: DenseOperator) -> Self {
        Self(op)
    }

    pub fn into_inner(self) -> DenseOperator {
        self.0
    }
}

impl Deref for Hermitian {
    type Target = DenseOperator;

    fn deref(&self) -> &DenseOperator {
        &self.0
    }
}

/// A matrix built as the exponential of `i` times a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary(DenseOperator);

impl Unitary {
    pub(crate) fn new_unchecked(op: DenseOperator) -> Self {
        Self(op)
    }

    pub fn into_inner(self) -> DenseOperator {
        self.0
    }
}

impl Deref for Unitary {
    type Target = DenseOperator;

    fn deref(&self) -> &DenseOperator {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn kron_and_norms() {
        let sx = DenseOperator::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) }).unwrap();
        let d = DenseOperator::from_fn(2, |i, j| if i == j { c(2.0 - i as f64, 0.0) } else { c(0.0, 0.0) }).unwrap();
        let k = d.kron(&sx);
        assert_eq!(k.dim(), 4);
        assert_eq!(k.get(1, 0), c(2.0, 0.0));
        assert_eq!(k.get(3, 2), c(1.0, 0.0));
        assert!((k.norm().unwrap() - 2.0).abs() < 1e-14);
        assert!((k.norm_on(&[2, 3]).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(sx.commutator(&sx).unwrap().max_abs(), 0.0);
        assert!(sx.unitarity_defect().unwrap() < 1e-15);
    }

    #[test]
    fn hermitian_wrapper() {
        let a = DenseOperator::from_fn(2, |i, j| c(i as f64, j as f64)).unwrap();
        assert!(matches!(Hermitian::new(a, 1e-12), Err(OracleError::NotHermitian { .. })));
        assert!(DenseOperator::from_fn(2, |_, _| c(f64::NAN, 0.0)).is_err());
    }
}
