//! Hermitian eigendecompositions split into boson-parity blocks.

use std::collections::BTreeMap;

use faer::{c64, Mat, MatRef, Side};

use crate::error::{OracleError, Result};
use crate::operator::{DenseOperator, Hermitian};

#[derive(Debug, Clone)]
enum Vectors {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: Vectors,
}

/// `H = sum_b V_b diag(E_b) V_b^*` over invariant coordinate blocks.
#[derive(Debug, Clone)]
pub struct Spectrum {
    dim: usize,
    blocks: Vec<Block>,
}

fn evd_err(e: impl std::fmt::Debug) -> OracleError {
    OracleError::Decomposition(format!("{e:?}"))
}

/// Splits `0..dim` by `label` when no entry couples two labels.
fn partition(dim: usize, label: &dyn Fn(usize) -> usize, couples: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut crossing = false;
    for (i, j) in couples {
        if label(i) != label(j) {
            crossing = true;
            break;
        }
    }
    if crossing {
        return vec![(0..dim).collect()];
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..dim {
        groups.entry(label(i)).or_default().push(i);
    }
    groups.into_values().collect()
}

impl Spectrum {
    /// Real symmetric matrix given by `(i, j, value)` entries (summed on repeats).
    pub(crate) fn from_real_entries(
        dim: usize,
        entries: &[(usize, usize, f64)],
        label: &dyn Fn(usize) -> usize,
    ) -> Result<Self> {
        let groups = partition(dim, label, entries.iter().filter(|e| e.2 != 0.0).map(|e| (e.0, e.1)));
        let mut position = vec![(0usize, 0usize); dim];
        for (g, idx) in groups.iter().enumerate() {
            for (k, &i) in idx.iter().enumerate() {
                position[i] = (g, k);
            }
        }
        let mut mats: Vec<Mat<f64>> = groups.iter().map(|g| Mat::zeros(g.len(), g.len())).collect();
        for &(i, j, v) in entries {
            let (g, a) = position[i];
            let (h, b) = position[j];
            if g == h {
                mats[g][(a, b)] += v;
            }
        }
        let mut blocks = Vec::with_capacity(groups.len());
        for (indices, m) in groups.into_iter().zip(mats) {
            let eig = m.self_adjoint_eigen(Side::Lower).map_err(evd_err)?;
            let values = (0..indices.len()).map(|k| eig.S().column_vector()[k]).collect();
            blocks.push(Block {
                indices,
                values,
                vectors: Vectors::Real(eig.U().to_owned()),
            });
        }
        Ok(Self { dim, blocks })
    }

    /// Dense Hermitian matrix; real blocks use the real solver.
    pub fn from_hermitian(h: &Hermitian, label: &dyn Fn(usize) -> usize) -> Result<Self> {
        let m = h.mat();
        let dim = h.dim();
        let nonzero = (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j)));
        let groups = partition(dim, label, nonzero.filter(|&(i, j)| m[(i, j)] != c64::new(0.0, 0.0)));
        let mut blocks = Vec::with_capacity(groups.len());
        for indices in groups {
            let n = indices.len();
            let sub = Mat::from_fn(n, n, |a, b| m[(indices[a], indices[b])]);
            let real = (0..n).all(|a| (0..n).all(|b| sub[(a, b)].im == 0.0));
            let (values, vectors) = if real {
                let re = Mat::from_fn(n, n, |a, b| sub[(a, b)].re);
                let eig = re.self_adjoint_eigen(Side::Lower).map_err(evd_err)?;
                let values = (0..n).map(|k| eig.S().column_vector()[k]).collect();
                (values, Vectors::Real(eig.U().to_owned()))
            } else {
                let eig = sub.self_adjoint_eigen(Side::Lower).map_err(evd_err)?;
                let values = (0..n).map(|k| eig.S().column_vector()[k].re).collect();
                (values, Vectors::Complex(eig.U().to_owned()))
            };
            blocks.push(Block {
                indices,
                values,
                vectors,
            });
        }
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// Normalized eigenvector of the lowest eigenvalue, as a column.
    pub fn ground_state(&self) -> Mat<c64> {
        let mut out = Mat::<c64>::zeros(self.dim, 1);
        let best = self
            .blocks
            .iter()
            .flat_map(|b| b.values.iter().enumerate().map(move |(k, &e)| (e, b, k)))
            .min_by(|x, y| x.0.total_cmp(&y.0));
        if let Some((_, block, k)) = best {
            for (a, &i) in block.indices.iter().enumerate() {
                out[(i, 0)] = match &block.vectors {
                    Vectors::Real(v) => c64::new(v[(a, k)], 0.0),
                    Vectors::Complex(v) => v[(a, k)],
                };
            }
        }
        out
    }

    /// `phi(H) x` for a diagonal function `phi` of the eigenvalues.
    fn apply_fn(&self, x: MatRef<'_, c64>, phi: impl Fn(f64) -> c64) -> Mat<c64> {
        let k = x.ncols();
        let mut out = Mat::<c64>::zeros(self.dim, k);
        for block in &self.blocks {
            let n = block.indices.len();
            let xb = Mat::from_fn(n, k, |a, j| x[(block.indices[a], j)]);
            let yb = match &block.vectors {
                Vectors::Complex(v) => {
                    let mut y = v.adjoint() * &xb;
                    scale_rows(&mut y, &block.values, &phi);
                    v * &y
                }
                Vectors::Real(v) => {
                    let (re, im) = split(xb.as_ref());
                    let mut y = join((v.transpose() * &re).as_ref(), (v.transpose() * &im).as_ref());
                    scale_rows(&mut y, &block.values, &phi);
                    let (re, im) = split(y.as_ref());
                    join((v * &re).as_ref(), (v * &im).as_ref())
                }
            };
            for (a, &i) in block.indices.iter().enumerate() {
                for j in 0..k {
                    out[(i, j)] = yb[(a, j)];
                }
            }
        }
        out
    }

    /// `e^{-itH} x`.
    pub fn propagate(&self, x: MatRef<'_, c64>, t: f64) -> Mat<c64> {
        self.apply_fn(x, |e| {
            let theta = -t * e;
            c64::new(theta.cos(), theta.sin())
        })
    }

    /// `e^{itH} A e^{-itH}`.
    pub fn conjugate(&self, a: &DenseOperator, t: f64) -> DenseOperator {
        // A e^{-itH} = (e^{itH} A^*)^*.
        let right = self.propagate(a.mat().adjoint().to_owned().as_ref(), -t);
        DenseOperator::from_mat_unchecked(self.propagate(right.adjoint().to_owned().as_ref(), -t))
    }
}

fn scale_rows(y: &mut Mat<c64>, values: &[f64], phi: &impl Fn(f64) -> c64) {
    for (a, &e) in values.iter().enumerate() {
        let s = phi(e);
        for j in 0..y.ncols() {
            y[(a, j)] *= s;
        }
    }
}

fn split(x: MatRef<'_, c64>) -> (Mat<f64>, Mat<f64>) {
    (
        Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].re),
        Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].im),
    )
}

fn join(re: MatRef<'_, f64>, im: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(re.nrows(), re.ncols(), |i, j| c64::new(re[(i, j)], im[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_split_and_reassemble() {
        // Two decoupled 2x2 blocks, interleaved.
        let entries = [(0, 0, 1.0), (2, 2, 3.0), (0, 2, 0.5), (2, 0, 0.5), (1, 1, -1.0), (3, 3, 2.0)];
        let s = Spectrum::from_real_entries(4, &entries, &|i| i % 2).unwrap();
        assert_eq!(s.num_blocks(), 2);
        let ev = s.eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[3] - (2.0 + 1.25f64.sqrt())).abs() < 1e-14);
        let x = Mat::<c64>::identity(4, 4);
        let u = s.propagate(x.as_ref(), 0.7);
        let back = s.propagate(u.as_ref(), -0.7);
        assert!((&back - &x).norm_max() < 1e-14);
        let single = Spectrum::from_real_entries(4, &entries, &|i| i).unwrap();
        assert_eq!(single.num_blocks(), 1);
    }
}
