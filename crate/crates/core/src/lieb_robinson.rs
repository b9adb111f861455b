//! Lieb-Robinson machinery for the harmonic lattice: the kernel envelopes,
//! the constants `(c_a, v_a)`, light-cone scans and front-velocity fits.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::harmonic::{
    evolve_convolution, HarmonicParameters, Kernel, KernelOrder, KernelTriple,
    PropagatorSpec, QuadratureSpec,
};
use crate::lattice::{DecayProfile, LatticeGeometry, Site};

/// Rates used when a bound is minimized over `mu`.
pub const MU_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Largest rate used by [`DecayCertificate::new`].
pub const MU_MAX: f64 = 4.0;

/// Default gap between the envelope rate `mu` and the profile rate `a`.
pub const DEFAULT_ETA: f64 = 1.0;

/// Slack allowed when comparing a computed kernel against its envelope.
pub const KERNEL_BOUND_SLACK: f64 = 1e-9;

/// `c max(2 / mu, e^{mu/2 + 1})`.
pub fn velocity_bound(c: f64, mu: f64) -> f64 {
    c * (2.0 / mu).max((0.5 * mu + 1.0).exp())
}

/// `1 + 2 e^{mu/2} c + 2 / c`.
pub fn prefactor(c: f64, mu: f64) -> f64 {
    1.0 + 2.0 * (0.5 * mu).exp() * c + 2.0 / c
}

/// `1 + 1/c + c e^{mu/2}`: bounds `|H0| + |H-1| + |H1|` against the envelope.
pub fn pointwise_coefficient(c: f64, mu: f64) -> f64 {
    1.0 + 1.0 / c + c * (0.5 * mu).exp()
}

/// Coefficient of the envelope bounding `|H^(m)_t|`.
pub fn kernel_coefficient(m: KernelOrder, c: f64, mu: f64) -> f64 {
    match m {
        KernelOrder::Zero => 1.0,
        KernelOrder::MinusOne => 1.0 / c,
        KernelOrder::One => c * (0.5 * mu).exp(),
    }
}

/// `e^{-mu (r - v |t|)}` with `v = velocity_bound(c, mu)`.
pub fn envelope(c: f64, mu: f64, r: f64, t: f64) -> f64 {
    (-mu * (r - velocity_bound(c, mu) * t.abs())).exp()
}

/// `min_mu prefactor(mu) e^{-mu (r - v(mu) |t|)}` over [`MU_GRID`]: a bound on
/// `|sigma(T_t delta_0, g)|` for `g` in `{delta_x, i delta_x}` with `|x| = r`.
pub fn pointwise_harmonic_bound(c: f64, r: f64, t: f64) -> f64 {
    MU_GRID
        .iter()
        .map(|&mu| prefactor(c, mu) * envelope(c, mu, r, t))
        .fold(f64::INFINITY, f64::min)
}

/// `sup_{r in N} (1 + r)^{d + eps} e^{-eta r}`.
pub fn polynomial_absorption(dim: usize, epsilon: f64, eta: f64) -> f64 {
    let p = dim as f64 + epsilon;
    let f = |r: f64| (p * (1.0 + r).ln() - eta * r).exp();
    let star = (p / eta - 1.0).max(0.0);
    f(star.floor()).max(f(star.ceil()))
}

/// Constants for `|sigma(T_t f, g)| <= c_a e^{v_a |t|} sum |f(x)| |g(y)| F_a(d(x, y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub c_a: f64,
    pub v_a: f64,
}

/// `c_a = prefactor(mu) sup_r (1+r)^{d+eps} e^{-(mu - a) r}` and
/// `v_a = mu velocity_bound(mu)`; requires `mu > a`.
pub fn derive_constants(
    params: &HarmonicParameters,
    a: f64,
    profile: &DecayProfile,
    mu: f64,
) -> Result<DerivedConstants> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::invalid("a", "must be finite and non-negative"));
    }
    if !(mu > a && mu.is_finite()) {
        return Err(Error::NoAdmissibleMu {
            a,
            constraint: "mu must be finite and strictly greater than a",
        });
    }
    let c = params.c();
    let absorb = polynomial_absorption(profile.dim(), profile.epsilon(), mu - a);
    Ok(DerivedConstants {
        c_a: prefactor(c, mu) * absorb,
        v_a: mu * velocity_bound(c, mu),
    })
}

/// Rate, constants and validity ceilings of a harmonic Lieb-Robinson bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCertificate {
    pub a: f64,
    pub mu: f64,
    pub velocity_bound: f64,
    pub prefactor: f64,
    pub c_a: f64,
    pub v_a: f64,
    /// Largest `a` admitted with the default gap: `MU_MAX - DEFAULT_ETA`.
    pub a0: f64,
    /// Ceiling for the perturbation moments; a model hypothesis.
    pub a1: f64,
}

impl DecayCertificate {
    /// Certificate at `mu = a + DEFAULT_ETA`, capped at [`MU_MAX`].
    pub fn new(params: &HarmonicParameters, profile: &DecayProfile) -> Result<Self> {
        let a = profile.a();
        let a0 = MU_MAX - DEFAULT_ETA;
        if a > a0 {
            return Err(Error::NoAdmissibleMu {
                a,
                constraint: "a + eta must not exceed mu_max = 4 (a <= a0 = 3)",
            });
        }
        Self::with_mu(params, profile, a + DEFAULT_ETA)
    }

    /// Certificate at an explicit `mu > a`.
    pub fn with_mu(params: &HarmonicParameters, profile: &DecayProfile, mu: f64) -> Result<Self> {
        let a = profile.a();
        let k = derive_constants(params, a, profile, mu)?;
        let c = params.c();
        let a0 = MU_MAX - DEFAULT_ETA;
        Ok(Self {
            a,
            mu,
            velocity_bound: velocity_bound(c, mu),
            prefactor: prefactor(c, mu),
            c_a: k.c_a,
            v_a: k.v_a,
            a0,
            a1: a0,
        })
    }

    pub fn with_a1(mut self, a1: f64) -> Self {
        self.a1 = a1;
        self
    }

    /// `c_a e^{v_a |t|} sum_{x,y} |f(x)| |g(y)| F_a(d(x, y))`.
    pub fn bound(&self, profile: &DecayProfile, f: &Field, g: &Field, t: f64) -> Result<f64> {
        Ok(self.c_a * (self.v_a * t.abs()).exp() * weighted_pairing(profile, f, g)?)
    }
}

/// `sum_{x,y} |f(x)| |g(y)| F_a(d(x, y))`.
pub fn weighted_pairing(profile: &DecayProfile, f: &Field, g: &Field) -> Result<f64> {
    if f.geometry() != g.geometry() {
        return Err(Error::GeometryMismatch);
    }
    profile.pairing(
        f.geometry(),
        f.iter().map(|(s, v)| (s, v.norm())),
        g.iter().map(|(s, v)| (s, v.norm())),
    )
}

/// Location of the largest envelope ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBoundPoint {
    pub m: KernelOrder,
    pub t: f64,
    pub site: Site,
    pub value: f64,
    pub envelope: f64,
    /// Absolute error bar of `value`.
    pub error_bar: f64,
    /// `|value| / envelope` without the error bar.
    pub raw_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBoundReport {
    pub mu: f64,
    /// `max (|H| - error_bar)_+ / envelope` over all checked points.
    pub max_ratio: f64,
    pub worst: KernelBoundPoint,
    pub points_checked: usize,
    /// Points whose sample is below its own error bar.
    pub unresolved: usize,
}

impl KernelBoundReport {
    pub fn passed(&self) -> bool {
        self.max_ratio <= 1.0 + KERNEL_BOUND_SLACK
    }
}

fn check_kernel(kernel: &Kernel, c: f64, mu: f64, report: &mut KernelBoundReport) {
    let bar = kernel.error_bar(c);
    let coef = kernel_coefficient(kernel.m, c, mu);
    for (site, value) in kernel.ball_samples() {
        let env = coef * envelope(c, mu, site.l1_norm() as f64, kernel.t);
        let resolved = value.abs() - bar;
        if resolved <= 0.0 {
            report.unresolved += 1;
        }
        let ratio = resolved.max(0.0) / env;
        report.points_checked += 1;
        if ratio > report.max_ratio || report.points_checked == 1 {
            report.max_ratio = ratio;
            report.worst = KernelBoundPoint {
                m: kernel.m,
                t: kernel.t,
                site,
                value,
                envelope: env,
                error_bar: bar,
                raw_ratio: value.abs() / env,
            };
        }
    }
}

/// Checks the kernel envelopes at every rate in `mus`, computing each kernel once.
pub fn verify_kernel_bounds_grid(
    params: &HarmonicParameters,
    mus: &[f64],
    t_grid: &[f64],
    window: u32,
    quad: &QuadratureSpec,
) -> Result<Vec<KernelBoundReport>> {
    if mus.iter().any(|mu| !(*mu > 0.0 && mu.is_finite())) {
        return Err(Error::invalid("mu", "must be positive and finite"));
    }
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid", "must be non-empty"));
    }
    let c = params.c();
    let mut reports: Vec<KernelBoundReport> = mus
        .iter()
        .map(|&mu| KernelBoundReport {
            mu,
            max_ratio: 0.0,
            worst: KernelBoundPoint {
                m: KernelOrder::Zero,
                t: 0.0,
                site: Site::origin(params.dim()),
                value: 0.0,
                envelope: 1.0,
                error_bar: 0.0,
                raw_ratio: 0.0,
            },
            points_checked: 0,
            unresolved: 0,
        })
        .collect();
    for &t in t_grid {
        let triple = KernelTriple::compute(params, t, window, quad)?;
        for m in KernelOrder::ALL {
            for report in reports.iter_mut() {
                check_kernel(triple.get(m), c, report.mu, report);
            }
        }
    }
    Ok(reports)
}

/// Largest ratio of `|H^(m)_t(x)|` to its envelope over `m`, `t_grid` and
/// the ball `|x| <= window`.
pub fn verify_kernel_bounds(
    params: &HarmonicParameters,
    mu: f64,
    t_grid: &[f64],
    window: u32,
    quad: &QuadratureSpec,
) -> Result<KernelBoundReport> {
    Ok(verify_kernel_bounds_grid(params, &[mu], t_grid, window, quad)?.remove(0))
}

/// `|1 - e^{i sigma}|`, the norm of `[tau_t(W(f)), W(g)]` when `sigma = sigma(T_t f, g)`.
pub fn chord(sigma: f64) -> f64 {
    2.0 * (0.5 * sigma).sin().abs()
}

/// Commutator norms of `W(delta_0)` against `W(delta_x)` and `W(i delta_x)`,
/// maximized over the two, for `x` on the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeScan {
    pub params: HarmonicParameters,
    pub x_max: u32,
    pub t_grid: Vec<f64>,
    /// `values[i][j]`: time `t_grid[i]`, site `j - x_max`.
    pub values: Vec<Vec<f64>>,
    /// Absolute error bar of the values in each row.
    pub resolution: Vec<f64>,
    pub threshold: f64,
}

impl ConeScan {
    /// Builds a scan from precomputed rows (one per time) with zero error bars.
    pub fn from_rows(
        params: HarmonicParameters,
        x_max: u32,
        t_grid: Vec<f64>,
        values: Vec<Vec<f64>>,
        threshold: f64,
    ) -> Result<Self> {
        let slices = values
            .into_iter()
            .map(|row| ConeSlice {
                values: row,
                resolution: 0.0,
            })
            .collect();
        Self::from_slices(params, x_max, t_grid, slices, threshold)
    }

    pub fn from_slices(
        params: HarmonicParameters,
        x_max: u32,
        t_grid: Vec<f64>,
        slices: Vec<ConeSlice>,
        threshold: f64,
    ) -> Result<Self> {
        let (values, resolution): (Vec<_>, Vec<_>) =
            slices.into_iter().map(|s| (s.values, s.resolution)).unzip();
        if !(threshold > 0.0 && threshold < 2.0) {
            return Err(Error::invalid("threshold", "must lie in (0, 2)"));
        }
        if values.len() != t_grid.len() {
            return Err(Error::DimensionMismatch {
                expected: t_grid.len(),
                found: values.len(),
            });
        }
        let width = 2 * x_max as usize + 1;
        if let Some(row) = values.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: row.len(),
            });
        }
        Ok(Self {
            params,
            x_max,
            t_grid,
            values,
            resolution,
            threshold,
        })
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        let r = i64::from(self.x_max);
        -r..=r
    }

    /// Largest `value - resolution - bound(|x|, t)` over all cells; the
    /// scan respects `bound` iff this is `<= 0`.
    pub fn worst_excess(&self, bound: impl Fn(u64, f64) -> f64) -> (f64, f64, i64) {
        let mut worst = (f64::NEG_INFINITY, 0.0, 0);
        for ((&t, row), &res) in self.t_grid.iter().zip(&self.values).zip(&self.resolution) {
            for (x, &v) in self.sites().zip(row) {
                let excess = v - res - bound(x.unsigned_abs(), t);
                if excess > worst.0 {
                    worst = (excess, t, x);
                }
            }
        }
        worst
    }

    /// Rows as `(t, x, value)` triples, time-major.
    pub fn cells(&self) -> impl Iterator<Item = (f64, i64, f64)> + '_ {
        self.t_grid.iter().zip(&self.values).flat_map(move |(&t, row)| {
            self.sites().zip(row.iter().copied()).map(move |(x, v)| (t, x, v))
        })
    }
}

/// One row of a cone scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSlice {
    pub values: Vec<f64>,
    /// Quadrature error bar; the chord is 1-Lipschitz in `sigma`.
    pub resolution: f64,
}

/// One time slice of a cone scan.
pub fn cone_slice(
    params: &HarmonicParameters,
    x_max: u32,
    t: f64,
    spec: &PropagatorSpec,
) -> Result<ConeSlice> {
    let dim = params.dim();
    let geometry = LatticeGeometry::infinite(dim, x_max.max(1))?;
    let f = Field::delta(geometry, Site::origin(dim), Complex64::new(1.0, 0.0))?;
    let spec = PropagatorSpec {
        min_window: spec.min_window.max(x_max),
        ..*spec
    };
    let (evolved, cert) = evolve_convolution(&f, params, t, &spec)?;
    let r = i64::from(x_max);
    let values = (-r..=r)
        .map(|x| {
            let v = evolved.get(&Site::on_axis(dim, 0, x));
            // sigma(T f, delta_x) = -Im Tf(x), sigma(T f, i delta_x) = Re Tf(x).
            chord(v.im).max(chord(v.re))
        })
        .collect();
    Ok(ConeSlice {
        values,
        resolution: cert.pointwise_error,
    })
}

/// Serial cone scan over `t_grid`.
pub fn cone_scan(
    params: &HarmonicParameters,
    x_max: u32,
    t_grid: &[f64],
    threshold: f64,
    spec: &PropagatorSpec,
) -> Result<ConeScan> {
    let slices = t_grid
        .iter()
        .map(|&t| cone_slice(params, x_max, t, spec))
        .collect::<Result<Vec<_>>>()?;
    ConeScan::from_slices(params.clone(), x_max, t_grid.to_vec(), slices, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEstimate {
    pub velocity: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the front positions about the fit.
    pub fit_residual: f64,
    pub slices_used: usize,
}

/// Front position: the outermost `|x|` whose value reaches `threshold`.
/// `None` if no site does, or if the front touches the edge of the scan.
pub fn front_position(row: &[f64], x_max: u32, threshold: f64) -> Option<u32> {
    let r = x_max as usize;
    let mut front = None;
    for (j, &v) in row.iter().enumerate() {
        if v >= threshold {
            let x = (j as i64 - r as i64).unsigned_abs() as u32;
            front = Some(front.map_or(x, |f: u32| f.max(x)));
        }
    }
    front.filter(|&f| f < x_max)
}

/// Least-squares slope of the threshold front against time.
pub fn estimate_velocity(scan: &ConeScan) -> Result<VelocityEstimate> {
    estimate_velocity_at(scan, scan.threshold)
}

pub fn estimate_velocity_at(scan: &ConeScan, threshold: f64) -> Result<VelocityEstimate> {
    let points: Vec<(f64, f64)> = scan
        .t_grid
        .iter()
        .zip(&scan.values)
        .filter_map(|(&t, row)| front_position(row, scan.x_max, threshold).map(|x| (t, f64::from(x))))
        .collect();
    if points.len() < 3 {
        return Err(Error::NoCrossings {
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_x = points.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = points.iter().map(|p| (p.0 - mean_t) * (p.0 - mean_t)).sum();
    if stt == 0.0 {
        return Err(Error::invalid("t_grid", "front times must not all coincide"));
    }
    let stx: f64 = points.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_x)).sum();
    let velocity = stx / stt;
    let intercept = mean_x - velocity * mean_t;
    let sse: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + velocity * p.0);
            r * r
        })
        .sum();
    Ok(VelocityEstimate {
        velocity,
        intercept,
        fit_residual: (sse / n).sqrt(),
        slices_used: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_bound_dominates_both_branches() {
        for c in [0.5, 1.0, 2.2] {
            for mu in [0.01, 0.5, 1.0, 2.0, 7.0] {
                let v = velocity_bound(c, mu);
                assert!(v >= 2.0 * c / mu);
                assert!(v >= c * (0.5 * mu + 1.0).exp());
            }
        }
    }

    #[test]
    fn prefactor_at_unit_c() {
        let mu = 1.3;
        assert!((prefactor(1.0, mu) - (1.0 + 2.0 * (0.5 * mu).exp() + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn minus_one_envelope_halves_when_c_doubles() {
        let a = kernel_coefficient(KernelOrder::MinusOne, 1.5, 1.0);
        let b = kernel_coefficient(KernelOrder::MinusOne, 3.0, 1.0);
        assert!((a - 2.0 * b).abs() < 1e-15);
    }

    #[test]
    fn absorption_is_the_integer_supremum() {
        for (d, eps, eta) in [(1, 1.0, 1.0), (2, 0.5, 0.3), (3, 1.0, 2.0)] {
            let brute = (0..2000)
                .map(|r| (1.0 + r as f64).powf(d as f64 + eps) * (-eta * r as f64).exp())
                .fold(0.0, f64::max);
            let got = polynomial_absorption(d, eps, eta);
            assert!((got - brute).abs() <= 1e-12 * brute);
        }
    }

    #[test]
    fn larger_rate_costs_velocity() {
        let params = HarmonicParameters::new(1.0, [1.0]).unwrap();
        let mut last = 0.0;
        for a in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let p = DecayProfile::with_default_epsilon(1, a).unwrap();
            let cert = DecayCertificate::new(&params, &p).unwrap();
            assert!(cert.v_a >= last);
            last = cert.v_a;
        }
        let p = DecayProfile::with_default_epsilon(1, 3.5).unwrap();
        assert!(matches!(
            DecayCertificate::new(&params, &p),
            Err(Error::NoAdmissibleMu { .. })
        ));
    }

    #[test]
    fn synthetic_cone_has_velocity_two() {
        let params = HarmonicParameters::new(0.0, [1.0]).unwrap();
        let x_max = 30u32;
        let t_grid: Vec<f64> = (0..10).map(f64::from).collect();
        let rows = t_grid
            .iter()
            .map(|&t| {
                (-(x_max as i64)..=x_max as i64)
                    .map(|x| if (x.abs() as f64) <= 2.0 * t { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let scan = ConeScan::from_rows(params, x_max, t_grid, rows, 0.5).unwrap();
        let v = estimate_velocity(&scan).unwrap();
        assert_eq!(v.velocity, 2.0);
        assert_eq!(v.fit_residual, 0.0);
    }

    #[test]
    fn too_few_crossings_is_an_error() {
        let params = HarmonicParameters::new(0.0, [1.0]).unwrap();
        let rows = alloc::vec![alloc::vec![0.0; 5]; 4];
        let scan = ConeScan::from_rows(params, 2, alloc::vec![0.0, 1.0, 2.0, 3.0], rows, 0.1).unwrap();
        assert_eq!(
            estimate_velocity(&scan),
            Err(Error::NoCrossings { found: 0 })
        );
    }

    #[test]
    fn origin_at_time_zero_is_boundary_case() {
        let params = HarmonicParameters::new(1.0, [1.0]).unwrap();
        let r = verify_kernel_bounds(&params, 1.0, &[0.0], 6, &QuadratureSpec::default()).unwrap();
        assert!(r.passed());
        let k = KernelTriple::compute(&params, 0.0, 0, &QuadratureSpec::default()).unwrap();
        let v = k.zero.value(&Site::from(0)).unwrap();
        assert!((v.abs() / envelope(params.c(), 1.0, 0.0, 0.0) - 1.0).abs() < 1e-14);
    }
}
