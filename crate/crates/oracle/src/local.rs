//! Single-site matrices and their embedding into the chain.

use faer::{c64, Mat, MatRef, Side};

use crate::config::{FockConfig, LEAKAGE_MARGIN};
use crate::error::{OracleError, Result};
use crate::operator::DenseOperator;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Lowering operator, `a[n, n + 1] = sqrt(n + 1)`.
pub fn lowering(cutoff: usize) -> Mat<f64> {
    Mat::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        if j == i + 1 {
            (j as f64).sqrt()
        } else {
            0.0
        }
    })
}

/// `q = (a + a^*) / sqrt 2`.
pub fn position(cutoff: usize) -> Mat<c64> {
    let a = lowering(cutoff);
    Mat::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        c64::new((a[(i, j)] + a[(j, i)]) * SQRT_HALF, 0.0)
    })
}

/// `p = i (a^* - a) / sqrt 2`, so that `[q, p] = i` below the cutoff.
pub fn momentum(cutoff: usize) -> Mat<c64> {
    let a = lowering(cutoff);
    Mat::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        c64::new(0.0, (a[(j, i)] - a[(i, j)]) * SQRT_HALF)
    })
}

/// Truncations of `q^2` (`sign = 1`) and `p^2` (`sign = -1`), entrywise exact.
pub(crate) fn square(cutoff: usize, sign: f64) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(3 * (cutoff + 1));
    for n in 0..=cutoff {
        out.push((n, n, n as f64 + 0.5));
        if n + 2 <= cutoff {
            let v = sign * (((n + 1) * (n + 2)) as f64).sqrt() / 2.0;
            out.push((n, n + 2, v));
            out.push((n + 2, n, v));
        }
    }
    out
}

/// `exp(i (Re z q + Im z p))` from the eigendecomposition of the truncated generator.
pub fn site_weyl(cutoff: usize, z: c64) -> Result<Mat<c64>> {
    let q = position(cutoff);
    let p = momentum(cutoff);
    let d = cutoff + 1;
    let g = Mat::from_fn(d, d, |i, j| q[(i, j)] * z.re + p[(i, j)] * z.im);
    let eig = g
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| OracleError::Decomposition(format!("{e:?}")))?;
    let u = eig.U();
    let s = eig.S().column_vector();
    let phased = Mat::from_fn(d, d, |i, k| {
        let theta = s[k].re;
        u[(i, k)] * c64::new(theta.cos(), theta.sin())
    });
    Ok(&phased * u.adjoint())
}

/// Weight of `w |0>` on occupations above `cutoff - LEAKAGE_MARGIN`.
pub(crate) fn vacuum_leakage_sq(w: MatRef<'_, c64>) -> f64 {
    let d = w.nrows();
    let first = d.saturating_sub(LEAKAGE_MARGIN);
    (first..d).map(|n| w[(n, 0)].norm_sqr()).sum()
}

/// Offsets, relative to a base index, of the local basis states on `support`.
fn offsets(config: &FockConfig, support: &[usize]) -> Vec<usize> {
    let d = config.local_dim();
    let mut out = vec![0usize];
    for &x in support {
        let s = config.stride(x);
        out = out
            .iter()
            .flat_map(|&o| (0..d).map(move |k| o + k * s))
            .collect();
    }
    out
}

/// Indices whose occupations on `support` are all zero.
fn bases(config: &FockConfig, support: &[usize]) -> Vec<usize> {
    (0..config.dim())
        .filter(|&i| {
            let occ = config.occupations(i);
            support.iter().all(|&x| occ[x] == 0)
        })
        .collect()
}

pub(crate) fn check_support(config: &FockConfig, support: &[usize], local_dim: usize) -> Result<()> {
    if support.windows(2).any(|w| w[0] >= w[1]) || support.iter().any(|&x| x >= config.sites()) {
        return Err(OracleError::config("support", "sites must be distinct, ascending and in range"));
    }
    let expected = config.local_dim().pow(support.len() as u32);
    if local_dim != expected {
        return Err(OracleError::DimensionMismatch {
            expected,
            found: local_dim,
        });
    }
    Ok(())
}

/// `local` acting on the sites in `support` (ascending), identity elsewhere.
pub fn embed(config: &FockConfig, support: &[usize], local: MatRef<'_, c64>) -> Result<DenseOperator> {
    check_support(config, support, local.nrows())?;
    let off = offsets(config, support);
    let mut m = Mat::<c64>::zeros(config.dim(), config.dim());
    for b in bases(config, support) {
        for (k, &ok) in off.iter().enumerate() {
            for (l, &ol) in off.iter().enumerate() {
                m[(b + ok, b + ol)] = local[(k, l)];
            }
        }
    }
    Ok(DenseOperator::from_mat_unchecked(m))
}

/// In-place `x <- (local on support) x` for every column of `x`.
pub fn apply_embedded(
    config: &FockConfig,
    support: &[usize],
    local: MatRef<'_, c64>,
    x: &mut Mat<c64>,
) -> Result<()> {
    check_support(config, support, local.nrows())?;
    if x.nrows() != config.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: config.dim(),
            found: x.nrows(),
        });
    }
    let off = offsets(config, support);
    let n = off.len();
    let mut buf = vec![c64::new(0.0, 0.0); n];
    for b in bases(config, support) {
        for j in 0..x.ncols() {
            for (k, &o) in off.iter().enumerate() {
                buf[k] = x[(b + o, j)];
            }
            for (k, &o) in off.iter().enumerate() {
                let mut acc = c64::new(0.0, 0.0);
                for (l, v) in buf.iter().enumerate() {
                    acc += local[(k, l)] * v;
                }
                x[(b + o, j)] = acc;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use lrlattice_core::HarmonicParameters;

    #[test]
    fn canonical_commutator_below_cutoff() {
        let n = 12;
        let q = position(n);
        let p = momentum(n);
        let comm = &q * &p - &p * &q;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { c64::new(0.0, 1.0) } else { c64::new(0.0, 0.0) };
                assert!((comm[(i, j)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn squares_match_products_below_cutoff() {
        let n = 10;
        let q = position(n);
        let qq = &q * &q;
        let mut sq = Mat::<c64>::zeros(n + 1, n + 1);
        for (i, j, v) in square(n, 1.0) {
            sq[(i, j)] = c64::new(v, 0.0);
        }
        for i in 0..n {
            for j in 0..n {
                assert!((qq[(i, j)] - sq[(i, j)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn embedding_agrees_with_application() {
        let config = FockConfig::new(3, 2, HarmonicParameters::new(1.0, [1.0]).unwrap()).unwrap();
        let w = site_weyl(2, c64::new(0.3, -0.2)).unwrap();
        let full = embed(&config, &[1], w.as_ref()).unwrap();
        let mut x = Mat::from_fn(config.dim(), 2, |i, j| c64::new(i as f64, j as f64 - 0.5));
        let expected = full.mat() * &x;
        apply_embedded(&config, &[1], w.as_ref(), &mut x).unwrap();
        assert!((&expected - &x).norm_max() < 1e-13);
    }
}
