//! Site operators and the truncated harmonic Hamiltonian
//! `sum_x (p_x^2 + omega^2 q_x^2) + lambda sum_bonds (q_x - q_y)^2`.

use faer::{c64, Mat};

use crate::config::FockConfig;
use crate::error::Result;
use crate::local::{embed, lowering, momentum, position, square};
use crate::operator::{DenseOperator, Hermitian};

/// Per-site `q_x`, `p_x`, `a_x`, `a_x^*`.
#[derive(Debug, Clone)]
pub struct SiteOperators {
    pub q: Vec<DenseOperator>,
    pub p: Vec<DenseOperator>,
    pub a: Vec<DenseOperator>,
    pub a_dag: Vec<DenseOperator>,
}

pub fn build_site_operators(config: &FockConfig) -> Result<SiteOperators> {
    let n = config.cutoff();
    let a = lowering(n);
    let a = Mat::from_fn(n + 1, n + 1, |i, j| c64::new(a[(i, j)], 0.0));
    let a_dag = a.adjoint().to_owned();
    let q = position(n);
    let p = momentum(n);
    let mut ops = SiteOperators {
        q: Vec::new(),
        p: Vec::new(),
        a: Vec::new(),
        a_dag: Vec::new(),
    };
    for x in 0..config.sites() {
        ops.q.push(embed(config, &[x], q.as_ref())?);
        ops.p.push(embed(config, &[x], p.as_ref())?);
        ops.a.push(embed(config, &[x], a.as_ref())?);
        ops.a_dag.push(embed(config, &[x], a_dag.as_ref())?);
    }
    Ok(ops)
}

/// Matrix entries of the Hamiltonian (repeats are summed).
pub(crate) fn hamiltonian_entries(config: &FockConfig) -> Vec<(usize, usize, f64)> {
    let n = config.cutoff();
    let omega_sq = config.params().omega().powi(2);
    let lambda = config.params().lambda()[0];
    let q2 = square(n, 1.0);
    let p2 = square(n, -1.0);
    // On-site weight of q_x^2: omega^2 plus lambda per bond end.
    let mut q2_weight = vec![omega_sq; config.sites()];
    for (x, y) in config.bonds() {
        q2_weight[x] += lambda;
        q2_weight[y] += lambda;
    }
    let q = lowering(n);
    let q_entries: Vec<(usize, usize, f64)> = (0..n)
        .map(|k| (k, k + 1, q[(k, k + 1)] * std::f64::consts::FRAC_1_SQRT_2))
        .flat_map(|(i, j, v)| [(i, j, v), (j, i, v)])
        .collect();

    let mut out = Vec::new();
    for i in 0..config.dim() {
        let occ = config.occupations(i);
        for x in 0..config.sites() {
            let s = config.stride(x);
            let base = i - occ[x] * s;
            for &(_, l, v) in p2.iter().filter(|e| e.0 == occ[x]) {
                out.push((i, base + l * s, v));
            }
            for &(_, l, v) in q2.iter().filter(|e| e.0 == occ[x]) {
                out.push((i, base + l * s, q2_weight[x] * v));
            }
        }
        for (x, y) in config.bonds() {
            let (sx, sy) = (config.stride(x), config.stride(y));
            let base = i - occ[x] * sx - occ[y] * sy;
            for &(_, kx, vx) in q_entries.iter().filter(|e| e.0 == occ[x]) {
                for &(_, ky, vy) in q_entries.iter().filter(|e| e.0 == occ[y]) {
                    out.push((i, base + kx * sx + ky * sy, -2.0 * lambda * vx * vy));
                }
            }
        }
    }
    out
}

pub fn build_hamiltonian(config: &FockConfig) -> Result<Hermitian> {
    let dim = config.dim();
    let mut m = Mat::<c64>::zeros(dim, dim);
    for (i, j, v) in hamiltonian_entries(config) {
        m[(i, j)] += c64::new(v, 0.0);
    }
    Ok(Hermitian::new_unchecked(DenseOperator::from_mat_unchecked(m)))
}
