//! Convolution form of `T_t` on Z^d with a certified truncation window.
//!
//! ```text
//! T_t f = f * conj(H0 + (i/2)(H-1 + H1)) + conj(f) * (i/2)(H1 - H-1)
//! ```

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use super::kernel::{KernelTriple, QuadratureSpec};
use super::params::HarmonicParameters;
use super::torus::apply_propagator_torus;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::{ball_sites, binomial, Site};
use crate::lieb_robinson::{pointwise_coefficient, velocity_bound};
use crate::sum::CompensatedComplexSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSpec {
    pub quad: QuadratureSpec,
    /// Bound on the l1 mass of `T_t f` outside the returned window.
    pub tolerance: f64,
    pub min_window: u32,
    pub max_window: u32,
}

impl Default for PropagatorSpec {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::default(),
            tolerance: 1e-12,
            min_window: 8,
            max_window: 2048,
        }
    }
}

/// Window radius `R` for which `sum_{|x| > R} |T_t f(x)| <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCertificate {
    pub radius: u32,
    /// Kernel samples needed: `R` plus the support radius of `f`.
    pub kernel_window: u32,
    pub mu: f64,
    pub bound: f64,
    /// Bound on the quadrature error of each returned value; set by
    /// [`evolve_convolution`], zero from [`certified_window`].
    pub pointwise_error: f64,
}

/// Upper bound on `|{z : |z| = r}| / (1 + r)^{d-1}`.
fn shell_envelope(dim: usize) -> f64 {
    let mut fact = 1.0;
    let mut total = 0.0;
    for k in 1..=dim as u64 {
        if k > 1 {
            fact *= (k - 1) as f64;
        }
        total += 2f64.powi(k as i32) * binomial(dim as u64, k) / fact;
    }
    total
}

struct TailModel {
    dim: usize,
    c: f64,
    log_l1: f64,
    rho: f64,
    t: f64,
    log_shell: f64,
}

impl TailModel {
    /// Log of the bound on the mass outside radius `r` at rate `mu`.
    fn log_bound(&self, r: f64, mu: f64) -> f64 {
        let r0 = r - self.rho;
        if r0 < 0.0 {
            return f64::INFINITY;
        }
        let d1 = (self.dim - 1) as f64;
        let q = ((r0 + 3.0) / (r0 + 2.0)).powf(d1) * (-mu).exp();
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let log_tail = self.log_shell + d1 * (r0 + 2.0).ln() - mu * (r0 + 1.0) - (1.0 - q).ln();
        self.log_l1
            + pointwise_coefficient(self.c, mu).ln()
            + mu * velocity_bound(self.c, mu) * self.t.abs()
            + log_tail
    }

    /// Minimum over `mu` by golden section on `ln mu`, seeded with a grid.
    fn best(&self, r: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 1.0);
        for mu in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let v = self.log_bound(r, mu);
            if v < best.0 {
                best = (v, mu);
            }
        }
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.01f64.ln(), 20f64.ln());
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = self.log_bound(r, x1.exp());
        let mut f2 = self.log_bound(r, x2.exp());
        for _ in 0..80 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = self.log_bound(r, x1.exp());
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = self.log_bound(r, x2.exp());
            }
        }
        for (v, x) in [(f1, x1), (f2, x2)] {
            if v < best.0 {
                best = (v, x.exp());
            }
        }
        best
    }
}

/// Smallest window radius whose kernel-envelope tail bound is below `spec.tolerance`.
pub fn certified_window(
    params: &HarmonicParameters,
    f: &Field,
    t: f64,
    spec: &PropagatorSpec,
) -> Result<WindowCertificate> {
    if !(spec.tolerance > 0.0) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    if spec.min_window == 0 || spec.max_window < spec.min_window {
        return Err(Error::invalid("max_window", "need 1 <= min_window <= max_window"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    let rho = f.support_radius() as u32;
    let l1 = f.norm_l1();
    let lo = spec.min_window.max(rho);
    if l1 == 0.0 {
        return Ok(WindowCertificate {
            radius: lo,
            kernel_window: lo + rho,
            mu: 1.0,
            bound: 0.0,
            pointwise_error: 0.0,
        });
    }
    let model = TailModel {
        dim: f.geometry().dim(),
        c: params.c(),
        log_l1: l1.ln(),
        rho: f64::from(rho),
        t,
        log_shell: shell_envelope(f.geometry().dim()).ln(),
    };
    let target = spec.tolerance.ln();
    let ok = |r: u64| model.best(r as f64).0 <= target;

    let mut lo = u64::from(lo);
    let cap = 1u64 << 31;
    let radius = if ok(lo) {
        lo
    } else {
        let mut hi = lo.max(1) * 2;
        while !ok(hi) {
            lo = hi;
            hi *= 2;
            if hi > cap {
                return Err(Error::WindowTooSmall {
                    required: u32::MAX,
                    max_window: spec.max_window,
                });
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    if radius > u64::from(spec.max_window) {
        return Err(Error::WindowTooSmall {
            required: radius as u32,
            max_window: spec.max_window,
        });
    }
    let (log_bound, mu) = model.best(radius as f64);
    Ok(WindowCertificate {
        radius: radius as u32,
        kernel_window: radius as u32 + rho,
        mu,
        bound: log_bound.exp(),
        pointwise_error: 0.0,
    })
}

/// `T_t f` on the certified ball `|x| <= R`, together with its certificate.
pub fn evolve_convolution(
    f: &Field,
    params: &HarmonicParameters,
    t: f64,
    spec: &PropagatorSpec,
) -> Result<(Field, WindowCertificate)> {
    if f.geometry().is_torus() {
        return Err(Error::WrongGeometry { expected: "infinite" });
    }
    if f.geometry().dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: f.geometry().dim(),
        });
    }
    let mut cert = certified_window(params, f, t, spec)?;
    let kernels = KernelTriple::compute(params, t, cert.kernel_window, &spec.quad)?;
    let c = params.c();
    cert.pointwise_error = f.norm_l1()
        * (kernels.minus.error_bar(c) + kernels.zero.error_bar(c) + kernels.plus.error_bar(c));
    let half_i = Complex64::new(0.0, 0.5);
    let source: Vec<(&Site, Complex64)> = f.iter().map(|(s, v)| (s, *v)).collect();
    let mut diff = alloc::vec![0i64; params.dim()];
    let mut out = Vec::new();
    for x in ball_sites(params.dim(), u64::from(cert.radius)) {
        let mut acc = CompensatedComplexSum::new();
        for (y, fy) in &source {
            for ((dst, a), b) in diff.iter_mut().zip(x.coords()).zip(y.coords()) {
                *dst = a - b;
            }
            let h0 = kernels.zero.value_at(&diff).expect("kernel window covers x - y");
            let hm = kernels.minus.value_at(&diff).expect("kernel window covers x - y");
            let hp = kernels.plus.value_at(&diff).expect("kernel window covers x - y");
            let direct = Complex64::new(h0, 0.0) - half_i * (hm + hp);
            let conjugate = half_i * (hp - hm);
            acc.add(direct * fy + conjugate * fy.conj());
        }
        out.push((x, acc.value()));
    }
    Ok((Field::from_entries(*f.geometry(), out)?, cert))
}

/// `T_t f` on Z^d, restricted to the certified window.
pub fn apply_propagator_convolution(
    f: &Field,
    params: &HarmonicParameters,
    t: f64,
    spec: &PropagatorSpec,
) -> Result<Field> {
    evolve_convolution(f, params, t, spec).map(|(field, _)| field)
}

/// The harmonic symplectic flow, dispatching on the geometry of the label.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDynamics {
    params: HarmonicParameters,
    spec: PropagatorSpec,
}

impl HarmonicDynamics {
    pub fn new(params: HarmonicParameters) -> Self {
        Self::with_spec(params, PropagatorSpec::default())
    }

    pub fn with_spec(params: HarmonicParameters, spec: PropagatorSpec) -> Self {
        Self { params, spec }
    }

    pub fn params(&self) -> &HarmonicParameters {
        &self.params
    }

    pub fn spec(&self) -> &PropagatorSpec {
        &self.spec
    }

    pub fn evolve(&self, f: &Field, t: f64) -> Result<Field> {
        if f.geometry().is_torus() {
            apply_propagator_torus(f, &self.params, t)
        } else {
            apply_propagator_convolution(f, &self.params, t, &self.spec)
        }
    }
}
