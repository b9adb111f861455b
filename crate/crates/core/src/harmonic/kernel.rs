//! Brillouin-zone quadrature for the propagator kernels
//!
//! ```text
//! H^(-1)_t(x) = (2 pi)^-d Im  int e^{i(k.x - 2 gamma t)} / gamma dk
//! H^(0)_t(x)  = (2 pi)^-d Re  int e^{i(k.x - 2 gamma t)} dk
//! H^(1)_t(x)  = (2 pi)^-d Im  int gamma e^{i(k.x - 2 gamma t)} dk
//! ```
//!
//! `gamma` is even in every `k_j`, so the odd parts cancel and each kernel is
//! `(2 pi)^-d int prod_j cos(k_j x_j) g(k) dk` with `g` one of
//! `cos(2 gamma t)`, `-sin(2 gamma t) / gamma`, `-gamma sin(2 gamma t)`. All three
//! are functions of `gamma^2`, hence smooth and periodic even when `omega = 0`,
//! and the periodic trapezoidal rule converges spectrally. The grid is offset by
//! half a cell so that `k = 0` is never a node.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use super::params::HarmonicParameters;
use crate::error::{Error, Result};
use crate::lattice::Site;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KernelOrder {
    MinusOne,
    Zero,
    One,
}

impl KernelOrder {
    pub const ALL: [KernelOrder; 3] = [KernelOrder::MinusOne, KernelOrder::Zero, KernelOrder::One];

    pub fn index(self) -> i8 {
        match self {
            KernelOrder::MinusOne => -1,
            KernelOrder::Zero => 0,
            KernelOrder::One => 1,
        }
    }

    pub fn from_index(m: i64) -> Option<Self> {
        match m {
            -1 => Some(KernelOrder::MinusOne),
            0 => Some(KernelOrder::Zero),
            1 => Some(KernelOrder::One),
            _ => None,
        }
    }

    /// Integrand weight as a function of `gamma`.
    fn weight(self, gamma: f64, t: f64) -> f64 {
        let phase = 2.0 * gamma * t;
        match self {
            KernelOrder::Zero => phase.cos(),
            KernelOrder::MinusOne => -2.0 * t * sinc(phase),
            KernelOrder::One => -gamma * phase.sin(),
        }
    }
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub points_per_axis: u32,
    pub refinement_tolerance: f64,
    pub max_refinements: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            points_per_axis: 64,
            refinement_tolerance: 1e-13,
            max_refinements: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 8 {
            return Err(Error::invalid("points_per_axis", "must be at least 8"));
        }
        if !(self.refinement_tolerance > 0.0) {
            return Err(Error::invalid("refinement_tolerance", "must be positive"));
        }
        if self.max_refinements == 0 {
            return Err(Error::invalid("max_refinements", "must be at least 1"));
        }
        Ok(())
    }
}

/// Samples of `H^(m)_t` on the cube `|x_j| <= window_radius`.
///
/// Every kernel is even in each coordinate, so only `|x_j|` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub m: KernelOrder,
    pub t: f64,
    pub dim: usize,
    pub window_radius: u32,
    pub quadrature_points_per_axis: u32,
    pub est_quadrature_error: f64,
    samples: Vec<f64>,
}

impl Kernel {
    fn offset(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let side = self.window_radius as usize + 1;
        let mut idx = 0usize;
        for &c in coords {
            let a = c.unsigned_abs() as usize;
            if a >= side {
                return None;
            }
            idx = idx * side + a;
        }
        Some(idx)
    }

    /// `H^(m)_t(x)`, or `None` outside the sampled cube.
    pub fn value(&self, site: &Site) -> Option<f64> {
        self.value_at(site.coords())
    }

    /// Same as [`value`](Self::value) on raw coordinates.
    pub fn value_at(&self, coords: &[i64]) -> Option<f64> {
        self.offset(coords).map(|i| self.samples[i])
    }

    /// Samples on the l1 ball `|x| <= window_radius`, lexicographic in `x`.
    pub fn ball_samples(&self) -> Vec<(Site, f64)> {
        let r = i64::from(self.window_radius);
        let mut out = Vec::new();
        let mut coords = vec![-r; self.dim];
        loop {
            let site = Site::new(coords.clone());
            if site.l1_norm() <= u64::from(self.window_radius) {
                let v = self.value(&site).expect("inside cube");
                out.push((site, v));
            }
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if coords[axis] < r {
                    coords[axis] += 1;
                    break;
                }
                coords[axis] = -r;
            }
        }
    }

    /// Absolute error bar of every sample: the last refinement difference
    /// plus a summation roundoff allowance. `c` is the dispersion maximum.
    pub fn error_bar(&self, c: f64) -> f64 {
        let scale = match self.m {
            KernelOrder::Zero => 1.0,
            KernelOrder::MinusOne => 2.0 * self.t.abs(),
            KernelOrder::One => c,
        };
        let terms = self.dim as f64 * f64::from(self.quadrature_points_per_axis) / 2.0 + 2.0;
        self.est_quadrature_error + terms * f64::EPSILON * scale
    }

    /// `sum_x |H(x)|` over the ball.
    pub fn l1_norm(&self) -> f64 {
        crate::sum::compensated_sum(self.ball_samples().into_iter().map(|(_, v)| v.abs()))
    }

    /// `sum_x |H(x) - delta_0(x)|` over the ball.
    pub fn l1_distance_to_delta(&self) -> f64 {
        crate::sum::compensated_sum(self.ball_samples().into_iter().map(|(s, v)| {
            if s.l1_norm() == 0 {
                (v - 1.0).abs()
            } else {
                v.abs()
            }
        }))
    }
}

/// Computes `H^(m)_t` on `|x_j| <= window`, doubling the grid until two
/// successive grids agree to `quad.refinement_tolerance`.
///
/// The starting grid is raised to at least `2 (window + 1)` points per axis so
/// the window is not aliased onto itself.
pub fn compute_kernel(
    params: &HarmonicParameters,
    m: KernelOrder,
    t: f64,
    window: u32,
    quad: &QuadratureSpec,
) -> Result<Kernel> {
    quad.validate()?;
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    let mut points = quad.points_per_axis.max(2 * (window + 1));
    points += points % 2;
    let mut previous = trapezoid(params, m, t, window, points);
    let mut achieved = f64::INFINITY;
    for _ in 0..quad.max_refinements {
        let finer_points = points * 2;
        let finer = trapezoid(params, m, t, window, finer_points);
        achieved = previous
            .iter()
            .zip(&finer)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        points = finer_points;
        previous = finer;
        if achieved <= quad.refinement_tolerance {
            return Ok(Kernel {
                m,
                t,
                dim: params.dim(),
                window_radius: window,
                quadrature_points_per_axis: points,
                est_quadrature_error: achieved,
                samples: previous,
            });
        }
    }
    Err(Error::QuadratureNotConverged {
        m: m.index(),
        t,
        tolerance: quad.refinement_tolerance,
        achieved,
        refinements: quad.max_refinements,
        best: alloc::boxed::Box::new(Kernel {
            m,
            t,
            dim: params.dim(),
            window_radius: window,
            quadrature_points_per_axis: points,
            est_quadrature_error: achieved,
            samples: previous,
        }),
    })
}

/// The three kernels at one time, sharing a window.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTriple {
    pub minus: Kernel,
    pub zero: Kernel,
    pub plus: Kernel,
}

impl KernelTriple {
    pub fn compute(
        params: &HarmonicParameters,
        t: f64,
        window: u32,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        Ok(Self {
            minus: compute_kernel(params, KernelOrder::MinusOne, t, window, quad)?,
            zero: compute_kernel(params, KernelOrder::Zero, t, window, quad)?,
            plus: compute_kernel(params, KernelOrder::One, t, window, quad)?,
        })
    }

    pub fn get(&self, m: KernelOrder) -> &Kernel {
        match m {
            KernelOrder::MinusOne => &self.minus,
            KernelOrder::Zero => &self.zero,
            KernelOrder::One => &self.plus,
        }
    }
}

/// Periodic trapezoidal rule on the half-cell offset grid with `points` nodes
/// per axis. Returns the dense cube `[0, window]^d` in row-major order.
fn trapezoid(
    params: &HarmonicParameters,
    m: KernelOrder,
    t: f64,
    window: u32,
    points: u32,
) -> Vec<f64> {
    let d = params.dim();
    let half = (points / 2) as usize;
    let side = window as usize + 1;
    let h = 2.0 * PI / f64::from(points);
    // Positive nodes k_i = (i + 1/2) h; the negative half mirrors them.
    let nodes: Vec<f64> = (0..half).map(|i| (i as f64 + 0.5) * h).collect();

    // cos(k_i x) = cos(pi (2i + 1) x / points), reduced exactly modulo 2 points.
    let two_p = 2 * points as u64;
    let cos_table: Vec<f64> = (0..two_p)
        .map(|j| (PI * j as f64 / f64::from(points)).cos())
        .collect();
    let mut cos_matrix = vec![0.0; side * half];
    for x in 0..side {
        for i in 0..half {
            let j = ((2 * i as u64 + 1) * x as u64) % two_p;
            cos_matrix[x * half + i] = cos_table[j as usize];
        }
    }

    // Integrand on the positive orthant of the grid.
    let sin_sq: Vec<f64> = nodes
        .iter()
        .map(|k| {
            let s = (0.5 * k).sin();
            s * s
        })
        .collect();
    let omega_sq = params.omega() * params.omega();
    let total = half.pow(d as u32);
    let mut data = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let gamma_sq = omega_sq
            + 4.0
                * params
                    .lambda()
                    .iter()
                    .zip(&idx)
                    .map(|(l, &i)| l * sin_sq[i])
                    .sum::<f64>();
        data.push(m.weight(gamma_sq.sqrt(), t));
        for axis in (0..d).rev() {
            idx[axis] += 1;
            if idx[axis] < half {
                break;
            }
            idx[axis] = 0;
        }
    }

    let mut shape = vec![half; d];
    for axis in 0..d {
        data = contract_axis(&data, &shape, axis, &cos_matrix, side);
        shape[axis] = side;
    }
    let scale = (2.0 / f64::from(points)).powi(d as i32);
    for v in &mut data {
        *v *= scale;
    }
    data
}

/// Replaces axis `axis` (length `shape[axis]`) by `rows` via the row-major
/// matrix `matrix` of shape `rows x shape[axis]`.
fn contract_axis(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    matrix: &[f64],
    rows: usize,
) -> Vec<f64> {
    let len = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        let src = &data[o * len * inner..(o + 1) * len * inner];
        let dst = &mut out[o * rows * inner..(o + 1) * rows * inner];
        for r in 0..rows {
            let row = &matrix[r * len..(r + 1) * len];
            let target = &mut dst[r * inner..(r + 1) * inner];
            for (i, &c) in row.iter().enumerate() {
                let line = &src[i * inner..(i + 1) * inner];
                for (tv, &sv) in target.iter_mut().zip(line) {
                    *tv += c * sv;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn time_zero_kernels_are_delta_and_zero() {
        for params in [
            HarmonicParameters::new(1.0, [1.0]).unwrap(),
            HarmonicParameters::new(0.0, [1.0, 1.0]).unwrap(),
        ] {
            let k = KernelTriple::compute(&params, 0.0, 6, &quad()).unwrap();
            for (site, v) in k.zero.ball_samples() {
                let expected = if site.l1_norm() == 0 { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-14);
            }
            for (_, v) in k.minus.ball_samples().into_iter().chain(k.plus.ball_samples()) {
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_dispersion_collapses_to_origin() {
        let params = HarmonicParameters::new(1.0, [0.0]).unwrap();
        let t = 0.7;
        let k = KernelTriple::compute(&params, t, 5, &quad()).unwrap();
        let o = Site::from(0);
        assert!((k.zero.value(&o).unwrap() - (2.0 * t).cos()).abs() < 1e-14);
        assert!((k.minus.value(&o).unwrap() + (2.0 * t).sin()).abs() < 1e-14);
        assert!((k.plus.value(&o).unwrap() + (2.0 * t).sin()).abs() < 1e-14);
        assert!(k.zero.value(&Site::from(3)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn nonconvergence_carries_best_estimate() {
        let params = HarmonicParameters::new(1.0, [1.0]).unwrap();
        let spec = QuadratureSpec {
            points_per_axis: 8,
            refinement_tolerance: 1e-30,
            max_refinements: 1,
        };
        match compute_kernel(&params, KernelOrder::Zero, 3.0, 4, &spec) {
            Err(Error::QuadratureNotConverged { best, achieved, .. }) => {
                assert_eq!(best.est_quadrature_error, achieved);
                assert!(best.value(&Site::from(0)).is_some());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn contract_axis_matches_dense_product() {
        // 2 x 3 data contracted along axis 1 by a 2 x 3 matrix.
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let m = [1.0, 0.0, -1.0, 0.5, 0.5, 0.5];
        let out = contract_axis(&data, &[2, 3], 1, &m, 2);
        assert_eq!(out, vec![-2.0, 3.0, -2.0, 7.5]);
    }
}
