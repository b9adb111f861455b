//! Spectral form of the propagator on the torus `(-L, L]^d`.
//!
//! The discrete Fourier transform is unitary with `k = 2 pi m / (2L)` and
//! `f^(k) = |Lambda|^{-1/2} sum_x e^{-i k.x} f(x)`. Complex conjugation `J`
//! acts on Fourier coefficients as `(J f)^(k) = conj f^(-k)`. In this picture
//!
//! ```text
//! U = (i/2) Gamma_+      V = (i/2) Gamma_- J
//! U* = -(i/2) Gamma_+    V* = V
//! T_t = (U + V) F^-1 M_t F (U* - V*),   M_t = e^{2 i gamma t}
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Float, Zero};

use super::params::HarmonicParameters;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::LatticeGeometry;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative tolerance of the zero-mode position check.
pub const ZERO_MODE_TOLERANCE: f64 = 1e-12;

/// Precomputed dispersion and multipliers on the Fourier grid of one torus.
#[derive(Debug, Clone)]
pub struct TorusModes {
    geometry: LatticeGeometry,
    side: usize,
    gamma: Vec<f64>,
    gamma_plus: Vec<f64>,
    gamma_minus: Vec<f64>,
    mirror: Vec<usize>,
    twiddle: Vec<Complex64>,
}

impl TorusModes {
    pub fn new(params: &HarmonicParameters, geometry: LatticeGeometry) -> Result<Self> {
        let side = geometry
            .side_length()
            .ok_or(Error::WrongGeometry { expected: "torus" })?;
        if geometry.dim() != params.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.dim(),
                found: geometry.dim(),
            });
        }
        let d = geometry.dim();
        let total = side.pow(d as u32);
        let mut gamma = Vec::with_capacity(total);
        let mut gamma_plus = Vec::with_capacity(total);
        let mut gamma_minus = Vec::with_capacity(total);
        let mut mirror = Vec::with_capacity(total);
        let mut k = vec![0.0; d];
        for index in 0..total {
            let mut rest = index;
            let mut neg = 0usize;
            let mut stride = 1usize;
            for axis in (0..d).rev() {
                let m = rest % side;
                rest /= side;
                k[axis] = 2.0 * PI * m as f64 / side as f64;
                neg += ((side - m) % side) * stride;
                stride *= side;
            }
            let g = params.gamma(&k);
            gamma.push(g);
            match super::params::BogoliubovMultipliers::from_gamma(g) {
                Some(b) => {
                    gamma_plus.push(b.gamma_plus);
                    gamma_minus.push(b.gamma_minus);
                }
                None => {
                    gamma_plus.push(f64::NAN);
                    gamma_minus.push(f64::NAN);
                }
            }
            mirror.push(neg);
        }
        let twiddle = (0..side)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / side as f64;
                Complex64::new(theta.cos(), -theta.sin())
            })
            .collect();
        Ok(Self {
            geometry,
            side,
            gamma,
            gamma_plus,
            gamma_minus,
            mirror,
            twiddle,
        })
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn num_modes(&self) -> usize {
        self.gamma.len()
    }

    /// `gamma` at each mode, row-major in the frequency index.
    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    /// `Gamma_+` and `Gamma_-` at each mode; NaN at zero modes.
    pub fn multipliers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gamma_plus.iter().copied().zip(self.gamma_minus.iter().copied())
    }

    fn is_zero_mode(&self, k: usize) -> bool {
        !(self.gamma[k] > 0.0)
    }

    /// Unitary forward transform of a dense row-major array.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        self.transform(values, false)
    }

    /// Unitary inverse transform.
    pub fn inverse(&self, values: &[Complex64]) -> Vec<Complex64> {
        self.transform(values, true)
    }

    fn transform(&self, values: &[Complex64], inverse: bool) -> Vec<Complex64> {
        let n = self.side;
        let d = self.geometry.dim();
        let scale = 1.0 / (n as f64).sqrt();
        let mut data = values.to_vec();
        let mut line = vec![Complex64::zero(); n];
        for axis in 0..d {
            let inner = n.pow((d - axis - 1) as u32);
            let outer = data.len() / (n * inner);
            for o in 0..outer {
                for i in 0..inner {
                    let base = o * n * inner + i;
                    for (m, slot) in line.iter_mut().enumerate() {
                        let mut acc = Complex64::zero();
                        for x in 0..n {
                            let w = self.twiddle[(m * x) % n];
                            let w = if inverse { w.conj() } else { w };
                            acc += w * data[base + x * inner];
                        }
                        *slot = acc * scale;
                    }
                    for (x, v) in line.iter().enumerate() {
                        data[base + x * inner] = *v;
                    }
                }
            }
        }
        data
    }

    fn conj_mirror(&self, v: &[Complex64], k: usize) -> Complex64 {
        v[self.mirror[k]].conj()
    }

    /// Fails unless the position part of `f^` vanishes on every zero mode.
    fn check_zero_modes(&self, fhat: &[Complex64], l1: f64) -> Result<()> {
        let root_n = (fhat.len() as f64).sqrt();
        for k in 0..fhat.len() {
            if self.is_zero_mode(k) {
                let re_part = 0.5 * (fhat[k] + self.conj_mirror(fhat, k));
                let mean = root_n * re_part.norm();
                if mean > ZERO_MODE_TOLERANCE * l1 {
                    return Err(Error::ZeroModeViolation { mean });
                }
            }
        }
        Ok(())
    }

    fn fourier_of(&self, f: &Field) -> Result<Vec<Complex64>> {
        if f.geometry() != &self.geometry {
            return Err(Error::GeometryMismatch);
        }
        Ok(self.forward(&f.to_torus_values()?))
    }

    /// `U v` on Fourier coefficients. Zero modes map to NaN.
    pub fn apply_u(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..v.len()).map(|k| 0.5 * I * self.gamma_plus[k] * v[k]).collect()
    }

    /// `U* v`.
    pub fn apply_u_star(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..v.len()).map(|k| -0.5 * I * self.gamma_plus[k] * v[k]).collect()
    }

    /// `V v`, antilinear.
    pub fn apply_v(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..v.len())
            .map(|k| 0.5 * I * self.gamma_minus[k] * self.conj_mirror(v, k))
            .collect()
    }

    /// `V* v`; equal to `V v`.
    pub fn apply_v_star(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.apply_v(v)
    }

    /// Fourier coefficients of `(U* - V*) f`, zero on zero modes.
    ///
    /// Fails with [`Error::ZeroModeViolation`] if `f` is outside the domain.
    pub fn u_star_minus_v_star(&self, f: &Field) -> Result<Vec<Complex64>> {
        let fhat = self.fourier_of(f)?;
        self.check_zero_modes(&fhat, f.norm_l1())?;
        Ok(self.u_star_minus_v_star_hat(&fhat))
    }

    fn u_star_minus_v_star_hat(&self, fhat: &[Complex64]) -> Vec<Complex64> {
        (0..fhat.len())
            .map(|k| {
                if self.is_zero_mode(k) {
                    Complex64::zero()
                } else {
                    -0.5 * I
                        * (self.gamma_plus[k] * fhat[k]
                            + self.gamma_minus[k] * self.conj_mirror(fhat, k))
                }
            })
            .collect()
    }

    /// `||(U* - V*) f||^2`.
    pub fn state_exponent(&self, f: &Field) -> Result<f64> {
        let h = self.u_star_minus_v_star(f)?;
        Ok(crate::sum::compensated_sum(h.iter().map(|z| z.norm_sqr())))
    }

    /// `T_t f`.
    ///
    /// On a zero mode (`omega = 0`) the position part must vanish; the mode is
    /// then a free momentum and is left unchanged.
    pub fn evolve(&self, f: &Field, t: f64) -> Result<Field> {
        if !t.is_finite() {
            return Err(Error::invalid("t", "must be finite"));
        }
        let fhat = self.fourier_of(f)?;
        self.check_zero_modes(&fhat, f.norm_l1())?;
        let mut h = self.u_star_minus_v_star_hat(&fhat);
        for (k, hk) in h.iter_mut().enumerate() {
            let phase = 2.0 * self.gamma[k] * t;
            *hk *= Complex64::new(phase.cos(), phase.sin());
        }
        let out: Vec<Complex64> = (0..h.len())
            .map(|k| {
                if self.is_zero_mode(k) {
                    fhat[k]
                } else {
                    0.5 * I
                        * (self.gamma_plus[k] * h[k] + self.gamma_minus[k] * self.conj_mirror(&h, k))
                }
            })
            .collect();
        Field::from_torus_values(self.geometry, &self.inverse(&out))
    }
}

/// `T_t f` on a torus geometry.
pub fn apply_propagator_torus(f: &Field, params: &HarmonicParameters, t: f64) -> Result<Field> {
    TorusModes::new(params, *f.geometry())?.evolve(f, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transform_round_trip_and_delta() {
        let geometry = LatticeGeometry::torus(2, 3).unwrap();
        let params = HarmonicParameters::new(1.0, [1.0, 0.5]).unwrap();
        let modes = TorusModes::new(&params, geometry).unwrap();
        let values: Vec<Complex64> = (0..36).map(|j| c(j as f64, 1.0 - j as f64 * 0.5)).collect();
        let back = modes.inverse(&modes.forward(&values));
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut delta = vec![Complex64::zero(); 36];
        delta[0] = c(1.0, 0.0);
        for v in modes.forward(&delta) {
            assert!((v - c(1.0 / 6.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn bogoliubov_relations_on_random_coefficients() {
        let geometry = LatticeGeometry::torus(1, 4).unwrap();
        let params = HarmonicParameters::new(0.7, [1.3]).unwrap();
        let modes = TorusModes::new(&params, geometry).unwrap();
        let v: Vec<Complex64> = (0..8).map(|j| c((j as f64).sin(), (2.0 * j as f64).cos())).collect();
        let uu = modes.apply_u_star(&modes.apply_u(&v));
        let vv = modes.apply_v_star(&modes.apply_v(&v));
        let vu = modes.apply_v_star(&modes.apply_u(&v));
        let uv = modes.apply_u_star(&modes.apply_v(&v));
        for k in 0..8 {
            assert!((uu[k] - vv[k] - v[k]).norm() < 1e-12);
            assert!((vu[k] - uv[k]).norm() <= 1e-15 * v[modes.mirror[k]].norm().max(1.0));
        }
    }

    #[test]
    fn massless_zero_mode_rejected_and_momentum_preserved() {
        let geometry = LatticeGeometry::torus(1, 8).unwrap();
        let params = HarmonicParameters::new(0.0, [1.0]).unwrap();
        let f = Field::delta(geometry, Site::from(0), c(1.0, 0.0)).unwrap();
        assert!(matches!(
            apply_propagator_torus(&f, &params, 0.3),
            Err(Error::ZeroModeViolation { .. })
        ));

        // Uniform momentum label: a zero mode, constant in time.
        let values = vec![c(0.0, 0.25); 16];
        let g = Field::from_torus_values(geometry, &values).unwrap();
        let out = apply_propagator_torus(&g, &params, 1.7).unwrap();
        assert!(out.max_abs_diff(&g).unwrap() < 1e-13);
    }
}
