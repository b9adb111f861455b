//! Lattice geometry on Z^d and its periodic tori, the l1 metric, and the
//! polynomial/exponential decay functions used by every bound in the crate.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Default polynomial excess in `F(r) = (1 + r)^-(d + epsilon)`.
pub const DEFAULT_EPSILON: f64 = 1.0;

/// A point of Z^d.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site(Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    /// The site `x * e_axis`.
    pub fn on_axis(dim: usize, axis: usize, x: i64) -> Self {
        let mut coords = vec![0; dim];
        coords[axis] = x;
        Site(coords)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|x| = sum_j |x_j|`.
    pub fn l1_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    pub fn neg(&self) -> Site {
        Site(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<i64> for Site {
    fn from(x: i64) -> Self {
        Site(vec![x])
    }
}

impl<const N: usize> From<[i64; N]> for Site {
    fn from(coords: [i64; N]) -> Self {
        Site(coords.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryMode {
    /// Z^d; the radius only sizes computation windows.
    Infinite { window_radius: u32 },
    /// The cube `(-L, L]^d` with periodic identification.
    Torus { half_side: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeGeometry {
    dim: usize,
    mode: GeometryMode,
}

impl LatticeGeometry {
    pub fn infinite(dim: usize, window_radius: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if window_radius == 0 {
            return Err(Error::invalid("window_radius", "must be at least 1"));
        }
        Ok(Self {
            dim,
            mode: GeometryMode::Infinite { window_radius },
        })
    }

    pub fn torus(dim: usize, half_side: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if half_side == 0 {
            return Err(Error::invalid("half_side", "must be at least 1"));
        }
        Ok(Self {
            dim,
            mode: GeometryMode::Torus { half_side },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> GeometryMode {
        self.mode
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.mode, GeometryMode::Torus { .. })
    }

    pub fn half_side(&self) -> Option<u32> {
        match self.mode {
            GeometryMode::Torus { half_side } => Some(half_side),
            GeometryMode::Infinite { .. } => None,
        }
    }

    pub fn window_radius(&self) -> Option<u32> {
        match self.mode {
            GeometryMode::Infinite { window_radius } => Some(window_radius),
            GeometryMode::Torus { .. } => None,
        }
    }

    /// Number of sites per axis of a torus (`2L`).
    pub fn side_length(&self) -> Option<usize> {
        self.half_side().map(|l| 2 * l as usize)
    }

    /// Total number of torus sites, `(2L)^d`.
    pub fn num_sites(&self) -> Option<usize> {
        self.side_length().map(|n| n.pow(self.dim as u32))
    }

    pub fn check_site(&self, site: &Site) -> Result<()> {
        if site.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: site.dim(),
            });
        }
        if let GeometryMode::Torus { half_side } = self.mode {
            let l = i64::from(half_side);
            if site.coords().iter().any(|&c| c <= -l || c > l) {
                return Err(Error::SiteOutOfRange {
                    site: site.coords().to_vec(),
                    half_side,
                });
            }
        }
        Ok(())
    }

    /// Metric distance: l1 on Z^d, the quotient l1 metric on a torus.
    pub fn distance(&self, x: &Site, y: &Site) -> Result<u64> {
        self.check_site(x)?;
        self.check_site(y)?;
        Ok(match self.mode {
            GeometryMode::Infinite { .. } => x
                .coords()
                .iter()
                .zip(y.coords())
                .map(|(a, b)| (a - b).unsigned_abs())
                .sum(),
            GeometryMode::Torus { half_side } => {
                let n = 2 * u64::from(half_side);
                x.coords()
                    .iter()
                    .zip(y.coords())
                    .map(|(a, b)| {
                        let diff = (a - b).unsigned_abs();
                        diff.min(n - diff)
                    })
                    .sum()
            }
        })
    }

    /// Maps any point of Z^d to its representative in `(-L, L]^d`.
    /// The identity on an infinite geometry.
    pub fn wrap(&self, site: &Site) -> Site {
        match self.mode {
            GeometryMode::Infinite { .. } => site.clone(),
            GeometryMode::Torus { half_side } => {
                let l = i64::from(half_side);
                let n = 2 * l;
                Site(
                    site.coords()
                        .iter()
                        .map(|&c| {
                            let r = (c + l - 1).rem_euclid(n);
                            r - l + 1
                        })
                        .collect(),
                )
            }
        }
    }

    /// Row-major index of a torus site, each coordinate taken modulo `2L`
    /// (so the origin has index 0).
    pub fn torus_index(&self, site: &Site) -> Result<usize> {
        let n = self
            .side_length()
            .ok_or(Error::WrongGeometry { expected: "torus" })?;
        self.check_site(site)?;
        Ok(site
            .coords()
            .iter()
            .fold(0usize, |acc, &c| acc * n + c.rem_euclid(n as i64) as usize))
    }

    /// Inverse of [`torus_index`](Self::torus_index).
    pub fn torus_site(&self, mut index: usize) -> Result<Site> {
        let half = self
            .half_side()
            .ok_or(Error::WrongGeometry { expected: "torus" })? as i64;
        let n = 2 * half as usize;
        let mut coords = vec![0i64; self.dim];
        for c in coords.iter_mut().rev() {
            let r = (index % n) as i64;
            index /= n;
            *c = if r > half { r - 2 * half } else { r };
        }
        Ok(Site(coords))
    }
}

/// Number of points of Z^d with `|z| = r`:
/// `sum_k 2^k C(d, k) C(r - 1, k - 1)` for `r >= 1`.
pub fn shell_count(dim: usize, r: u64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for k in 1..=dim.min(r as usize) {
        let k64 = k as u64;
        total += 2f64.powi(k as i32) * binomial(dim as u64, k64) * binomial(r - 1, k64 - 1);
    }
    total
}

pub(crate) fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Sites with `|z| = r`, in lexicographic order.
pub fn shell_sites(dim: usize, r: u64) -> Vec<Site> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(dim);
    push_shell(dim, r as i64, &mut prefix, &mut out);
    out
}

fn push_shell(dim: usize, r: i64, prefix: &mut Vec<i64>, out: &mut Vec<Site>) {
    if dim == 1 {
        let mut push = |c: i64| {
            let mut coords = prefix.clone();
            coords.push(c);
            out.push(Site(coords));
        };
        if r == 0 {
            push(0);
        } else {
            push(-r);
            push(r);
        }
        return;
    }
    for c in -r..=r {
        prefix.push(c);
        push_shell(dim - 1, r - c.abs(), prefix, out);
        prefix.pop();
    }
}

/// The l1 ball `|z| <= radius` in shell order (by `|z|`, then lexicographic).
pub fn ball_sites(dim: usize, radius: u64) -> Vec<Site> {
    (0..=radius).flat_map(|r| shell_sites(dim, r)).collect()
}

/// `F_a(r) = e^{-a r} (1 + r)^{-(d + epsilon)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayProfile {
    dim: usize,
    epsilon: f64,
    a: f64,
}

impl DecayProfile {
    pub fn new(dim: usize, epsilon: f64, a: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be positive and finite"));
        }
        if !(a >= 0.0) || a.is_nan() {
            return Err(Error::invalid("a", "must be non-negative"));
        }
        Ok(Self { dim, epsilon, a })
    }

    pub fn with_default_epsilon(dim: usize, a: f64) -> Result<Self> {
        Self::new(dim, DEFAULT_EPSILON, a)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Same profile with a different exponential rate.
    pub fn with_rate(&self, a: f64) -> Result<Self> {
        Self::new(self.dim, self.epsilon, a)
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::NegativeDistance(r));
        }
        Ok(self.eval(r))
    }

    /// `F_a` at an integer distance.
    #[inline]
    pub fn at(&self, r: u64) -> f64 {
        self.eval(r as f64)
    }

    #[inline]
    fn eval(&self, r: f64) -> f64 {
        let power = -(self.dim as f64 + self.epsilon);
        let poly = (1.0 + r).powf(power);
        if self.a == 0.0 {
            poly
        } else if r.is_infinite() {
            0.0
        } else {
            (-self.a * r).exp() * poly
        }
    }

    /// `sum_{x,y} |f(x)| |g(y)| F_a(d(x, y))` over weighted site lists.
    pub fn pairing<'a, I, J>(&self, geometry: &LatticeGeometry, f: I, g: J) -> Result<f64>
    where
        I: IntoIterator<Item = (&'a Site, f64)>,
        J: IntoIterator<Item = (&'a Site, f64)> + Clone,
    {
        let mut acc = CompensatedSum::new();
        for (x, fx) in f {
            for (y, gy) in g.clone() {
                acc.add(fx * gy * self.at(geometry.distance(x, y)?));
            }
        }
        Ok(acc.value())
    }
}

/// Windowed lattice sum plus a rigorous bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBracket {
    pub value: f64,
    pub tail_bound: f64,
}

impl NormBracket {
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }
}

/// `||F_a|| = sum_{z in Z^d} F_a(|z|)`, summed over `|z| <= window` with an
/// integral-comparison tail bound.
pub fn uniform_norm(profile: &DecayProfile, window: u32) -> NormBracket {
    let value = (0..=u64::from(window))
        .map(|r| shell_count(profile.dim, r) * profile.at(r))
        .collect::<CompensatedSum>()
        .value();
    NormBracket {
        value,
        tail_bound: norm_tail_bound(profile, window),
    }
}

/// Bounds `sum_{|z| > w} F_a(|z|)`.
///
/// Uses `shell(r) <= B (1 + r)^{d-1}`, so each shell term is dominated by the
/// decreasing `B e^{-ar} (1 + r)^{-1-eps}` whose integral over `[w, inf)` is
/// bounded in two ways; the smaller is returned.
fn norm_tail_bound(profile: &DecayProfile, window: u32) -> f64 {
    let d = profile.dim;
    let shell_constant: f64 = (1..=d)
        .map(|k| 2f64.powi(k as i32) * binomial(d as u64, k as u64) / factorial(k - 1))
        .sum();
    let w = f64::from(window);
    let eps = profile.epsilon;
    let decay = (-profile.a * w).exp();
    let polynomial = (1.0 + w).powf(-eps) / eps;
    let bound = if profile.a > 0.0 {
        polynomial.min((1.0 + w).powf(-1.0 - eps) / profile.a)
    } else {
        polynomial
    };
    shell_constant * decay * bound
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Windowed estimate of the convolution constant
/// `C_a = sup_{x,y} sum_z F_a(d(x,z)) F_a(d(z,y)) / F_a(d(x,y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionConstant {
    pub value: f64,
    pub worst_separation: Site,
    pub window: u32,
    /// Same estimate at half the window; drives the convergence flag.
    pub half_window_value: f64,
}

impl ConvolutionConstant {
    pub fn relative_change(&self) -> f64 {
        (self.value - self.half_window_value).abs() / self.value
    }

    pub fn converged(&self, tolerance: f64) -> bool {
        self.relative_change() <= tolerance
    }
}

/// Max over separations `|s| <= window` of
/// `sum_{|z| <= 2 window} F_a(|z|) F_a(|s - z|) / F_a(|s|)`.
pub fn convolution_constant(profile: &DecayProfile, window: u32) -> ConvolutionConstant {
    let (value, worst_separation) = windowed_convolution_max(profile, window);
    let (half_window_value, _) = windowed_convolution_max(profile, window / 2);
    ConvolutionConstant {
        value,
        worst_separation,
        window,
        half_window_value,
    }
}

/// `sum_{|z| <= z_radius} F_a(|z|) F_a(|s - z|) / F_a(|s|)` for one separation.
pub fn convolution_sum(profile: &DecayProfile, separation: &Site, z_radius: u32) -> f64 {
    let d = profile.dim;
    let zs = ball_sites(d, u64::from(z_radius));
    let s_norm = separation.l1_norm();
    let table = decay_table(profile, s_norm + u64::from(z_radius));
    let mut acc = CompensatedSum::new();
    for z in &zs {
        let sz: u64 = separation
            .coords()
            .iter()
            .zip(z.coords())
            .map(|(a, b)| (a - b).unsigned_abs())
            .sum();
        acc.add(table[z.l1_norm() as usize] * table[sz as usize]);
    }
    acc.value() / table[s_norm as usize]
}

fn decay_table(profile: &DecayProfile, max_r: u64) -> Vec<f64> {
    (0..=max_r).map(|r| profile.at(r)).collect()
}

fn windowed_convolution_max(profile: &DecayProfile, window: u32) -> (f64, Site) {
    let d = profile.dim;
    let w = u64::from(window);
    let table = decay_table(profile, 3 * w);
    let zs = ball_sites(d, 2 * w);
    let z_flat: Vec<i64> = zs.iter().flat_map(|z| z.coords().iter().copied()).collect();
    let z_norms: Vec<usize> = zs.iter().map(|z| z.l1_norm() as usize).collect();

    let mut best = f64::NEG_INFINITY;
    let mut worst = Site::origin(d);
    for s in ball_sites(d, w) {
        let sc = s.coords();
        let mut acc = CompensatedSum::new();
        for (z, &zn) in z_flat.chunks_exact(d).zip(&z_norms) {
            let sz: u64 = sc.iter().zip(z).map(|(a, b)| (a - b).unsigned_abs()).sum();
            acc.add(table[zn] * table[sz as usize]);
        }
        let value = acc.value() / table[s.l1_norm() as usize];
        if value > best {
            best = value;
            worst = s;
        }
    }
    (best, worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let z2 = LatticeGeometry::infinite(2, 8).unwrap();
        assert_eq!(z2.distance(&Site::from([0, 0]), &Site::from([1, 2])).unwrap(), 3);
        let ring = LatticeGeometry::torus(1, 4).unwrap();
        assert_eq!(ring.distance(&Site::from(4), &Site::from(-3)).unwrap(), 1);
        assert_eq!(ring.distance(&Site::from(2), &Site::from(2)).unwrap(), 0);
    }

    #[test]
    fn distance_rejects_sites_outside_torus() {
        let ring = LatticeGeometry::torus(1, 4).unwrap();
        assert!(matches!(
            ring.distance(&Site::from(-4), &Site::from(0)),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            ring.distance(&Site::from([0, 0]), &Site::from(0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn torus_metric_axioms_exhaustive() {
        for (d, l) in [(1, 3), (2, 2)] {
            let g = LatticeGeometry::torus(d, l).unwrap();
            let sites: Vec<Site> = (0..g.num_sites().unwrap())
                .map(|i| g.torus_site(i).unwrap())
                .collect();
            for x in &sites {
                for y in &sites {
                    let dxy = g.distance(x, y).unwrap();
                    assert_eq!(dxy, g.distance(y, x).unwrap());
                    assert_eq!(dxy == 0, x == y);
                    for z in &sites {
                        assert!(dxy <= g.distance(x, z).unwrap() + g.distance(z, y).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn torus_index_round_trips_and_wraps() {
        let g = LatticeGeometry::torus(2, 3).unwrap();
        for i in 0..g.num_sites().unwrap() {
            let s = g.torus_site(i).unwrap();
            assert_eq!(g.torus_index(&s).unwrap(), i);
        }
        assert_eq!(g.torus_index(&Site::origin(2)).unwrap(), 0);
        assert_eq!(g.wrap(&Site::from([-3, 7])), Site::from([3, 1]));
    }

    #[test]
    fn shell_counts_match_enumeration() {
        for d in 1..=3 {
            for r in 0..8 {
                assert_eq!(shell_count(d, r), shell_sites(d, r).len() as f64, "d={d} r={r}");
            }
        }
        let shell = shell_sites(2, 1);
        assert_eq!(
            shell,
            [[-1, 0], [0, -1], [0, 1], [1, 0]].map(Site::from).to_vec()
        );
    }

    #[test]
    fn decay_value_examples() {
        let f = DecayProfile::new(1, 1.0, 0.0).unwrap();
        assert_eq!(f.value(0.0).unwrap(), 1.0);
        assert_eq!(f.value(1.0).unwrap(), 0.25);
        let fa = DecayProfile::new(1, 1.0, 0.7).unwrap();
        for r in [0.0, 0.5, 3.0, 10.0] {
            let lhs = f.value(r).unwrap();
            let rhs = fa.value(r).unwrap() * (0.7 * r).exp();
            assert!((lhs - rhs).abs() <= 1e-15 * lhs);
        }
        assert!(matches!(f.value(-1.0), Err(Error::NegativeDistance(_))));
    }

    #[test]
    fn uniform_norm_brackets_closed_form() {
        let f = DecayProfile::new(1, 1.0, 0.0).unwrap();
        let exact = core::f64::consts::PI.powi(2) / 3.0 - 1.0;
        for w in [16, 256, 4096] {
            let b = uniform_norm(&f, w);
            assert!(b.value <= exact && exact <= b.upper(), "window {w}: {b:?}");
        }
        assert!((uniform_norm(&f, 4096).value - exact).abs() < 1e-3);
    }

    #[test]
    fn uniform_norm_large_rate_keeps_only_origin() {
        let f = DecayProfile::new(1, 1.0, 60.0).unwrap();
        let b = uniform_norm(&f, 32);
        assert!((b.value - 1.0).abs() < 1e-25);
        assert!(b.tail_bound < 1e-25);
    }

    #[test]
    fn uniform_norm_bracket_shrinks() {
        for (d, a) in [(1, 0.0), (2, 0.3), (3, 1.0)] {
            let f = DecayProfile::new(d, 1.0, a).unwrap();
            let mut prev = uniform_norm(&f, 1);
            for w in 2..40 {
                let b = uniform_norm(&f, w);
                assert!(b.value >= prev.value);
                assert!(b.upper() <= prev.upper() * (1.0 + 1e-15));
                prev = b;
            }
        }
    }

    #[test]
    fn convolution_constant_rate_domination_and_lower_bound() {
        let f0 = DecayProfile::new(1, 1.0, 0.0).unwrap();
        let fa = DecayProfile::new(1, 1.0, 0.5).unwrap();
        let c0 = convolution_constant(&f0, 64);
        let ca = convolution_constant(&fa, 64);
        assert!(ca.value <= c0.value);
        assert!(c0.value >= f0.at(0));
        assert!(ca.value >= fa.at(0));
    }

    #[test]
    fn convolution_sum_is_even_in_separation() {
        let f = DecayProfile::new(2, 1.0, 0.2).unwrap();
        for s in ball_sites(2, 4) {
            let plus = convolution_sum(&f, &s, 12);
            let minus = convolution_sum(&f, &s.neg(), 12);
            assert!((plus - minus).abs() <= 1e-14 * plus);
        }
    }
}
