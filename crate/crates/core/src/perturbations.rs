//! Anharmonic perturbations `P_X = int W(z . delta_X) d mu_X(z)` given by even
//! atomic measures, their moment constants and the perturbed bounds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::lattice::{DecayProfile, LatticeGeometry, Site};
use crate::lieb_robinson::DecayCertificate;
use crate::sum::CompensatedSum;

/// One atom `w delta_z` of a measure on `C^X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub z: Vec<Complex64>,
    pub weight: f64,
}

/// Even atomic measure on `C^X`.
///
/// Only one representative of each pair `{z, -z}` is stored; iteration yields
/// both, each with the stored weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicWeylMeasure {
    support: Vec<Site>,
    representatives: Vec<Atom>,
}

impl AtomicWeylMeasure {
    /// Measure whose atoms are `representatives` together with their mirrors.
    pub fn new(support: Vec<Site>, representatives: Vec<Atom>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("support", "must be non-empty"));
        }
        let unique: BTreeSet<&Site> = support.iter().collect();
        if unique.len() != support.len() {
            return Err(Error::invalid("support", "sites must be distinct"));
        }
        for atom in &representatives {
            if atom.z.len() != support.len() {
                return Err(Error::DimensionMismatch {
                    expected: support.len(),
                    found: atom.z.len(),
                });
            }
            if !(atom.weight > 0.0 && atom.weight.is_finite()) {
                return Err(Error::invalid("weight", "must be positive and finite"));
            }
            if atom.z.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::invalid("z", "must be finite"));
            }
        }
        Ok(Self {
            support,
            representatives,
        })
    }

    /// Measure from a complete atom list, which must already be even.
    pub fn from_explicit(support: Vec<Site>, atoms: Vec<Atom>) -> Result<Self> {
        let mut unmatched: Vec<Option<Atom>> = atoms.into_iter().map(Some).collect();
        let mut representatives = Vec::new();
        for i in 0..unmatched.len() {
            let Some(atom) = unmatched[i].take() else {
                continue;
            };
            let partner = (i + 1..unmatched.len()).find(|&j| {
                unmatched[j].as_ref().is_some_and(|b| {
                    b.weight == atom.weight && b.z.iter().zip(&atom.z).all(|(p, q)| *p == -*q)
                })
            });
            match partner {
                Some(j) => {
                    unmatched[j] = None;
                    representatives.push(atom);
                }
                None => {
                    return Err(Error::OddMeasure {
                        support: support.iter().map(|s| s.coords().to_vec()).collect(),
                    })
                }
            }
        }
        Self::new(support, representatives)
    }

    /// Example 2 of the model: `2 cos(alpha q_x + beta p_x)` with `z = alpha + i beta`.
    pub fn cosine(site: Site, z: Complex64) -> Self {
        Self {
            support: alloc::vec![site],
            representatives: alloc::vec![Atom {
                z: alloc::vec![z],
                weight: 1.0,
            }],
        }
    }

    pub fn support(&self) -> &[Site] {
        &self.support
    }

    pub fn representatives(&self) -> &[Atom] {
        &self.representatives
    }

    /// All atoms, mirrors included.
    pub fn atoms(&self) -> impl Iterator<Item = (Vec<Complex64>, f64)> + '_ {
        self.representatives.iter().flat_map(|a| {
            let neg = a.z.iter().map(|v| -*v).collect();
            [(a.z.clone(), a.weight), (neg, a.weight)]
        })
    }

    /// Total mass, mirrors included.
    pub fn total_mass(&self) -> f64 {
        2.0 * self.representatives.iter().map(|a| a.weight).sum::<f64>()
    }

    /// `z . delta_X` as a field.
    pub fn label(&self, geometry: LatticeGeometry, z: &[Complex64]) -> Result<Field> {
        Field::from_entries(geometry, self.support.iter().cloned().zip(z.iter().copied()))
    }

    fn position(&self, site: &Site) -> Option<usize> {
        self.support.iter().position(|s| s == site)
    }

    /// `int |z_x| |z_y| d mu` (`x = y` allowed).
    fn pair_weight(&self, x: usize, y: usize) -> f64 {
        2.0 * self
            .representatives
            .iter()
            .map(|a| a.z[x].norm() * a.z[y].norm() * a.weight)
            .sum::<f64>()
    }

    /// `int |z|^2 d mu`.
    pub fn second_moment(&self) -> f64 {
        2.0 * self
            .representatives
            .iter()
            .map(|a| a.z.iter().map(|v| v.norm_sqr()).sum::<f64>() * a.weight)
            .sum::<f64>()
    }
}

/// `P^Lambda = sum_X P_X` on a finite volume.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFamily {
    geometry: LatticeGeometry,
    volume: BTreeSet<Site>,
    measures: Vec<AtomicWeylMeasure>,
}

impl PerturbationFamily {
    pub fn new(geometry: LatticeGeometry, volume: impl IntoIterator<Item = Site>) -> Result<Self> {
        let volume: BTreeSet<Site> = volume.into_iter().collect();
        for site in &volume {
            geometry.check_site(site)?;
        }
        Ok(Self {
            geometry,
            volume,
            measures: Vec::new(),
        })
    }

    pub fn with_measure(mut self, measure: AtomicWeylMeasure) -> Result<Self> {
        self.push(measure)?;
        Ok(self)
    }

    pub fn push(&mut self, measure: AtomicWeylMeasure) -> Result<()> {
        if let Some(outside) = measure.support().iter().find(|s| !self.volume.contains(s)) {
            return Err(Error::SiteOutsideVolume {
                site: outside.coords().to_vec(),
            });
        }
        self.measures.push(measure);
        Ok(())
    }

    /// The cosine perturbation `2 cos(Re z q_x + Im z p_x)` at every site of the volume.
    pub fn uniform_cosine(
        geometry: LatticeGeometry,
        volume: impl IntoIterator<Item = Site>,
        z: Complex64,
    ) -> Result<Self> {
        let mut family = Self::new(geometry, volume)?;
        let sites: Vec<Site> = family.volume.iter().cloned().collect();
        for site in sites {
            family.push(AtomicWeylMeasure::cosine(site, z))?;
        }
        Ok(family)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn volume(&self) -> &BTreeSet<Site> {
        &self.volume
    }

    pub fn measures(&self) -> &[AtomicWeylMeasure] {
        &self.measures
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// Same terms, restricted to those supported inside `volume`.
    pub fn restrict(&self, volume: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut out = Self::new(self.geometry, volume)?;
        for m in &self.measures {
            if m.support().iter().all(|s| out.volume.contains(s)) {
                out.push(m.clone())?;
            }
        }
        Ok(out)
    }

    /// Sites covered by some term, in order.
    fn active_sites(&self) -> BTreeSet<&Site> {
        self.measures.iter().flat_map(|m| m.support().iter()).collect()
    }
}

/// `kappa = max_x int |z|^2 d mu_x` for an on-site family.
pub fn second_moment(family: &PerturbationFamily) -> Result<f64> {
    let mut per_site: BTreeMap<&Site, f64> = BTreeMap::new();
    for m in &family.measures {
        if m.support().len() != 1 {
            return Err(Error::NonSingletonSupport {
                support: m.support().iter().map(|s| s.coords().to_vec()).collect(),
            });
        }
        *per_site.entry(&m.support()[0]).or_insert(0.0) += m.second_moment();
    }
    Ok(per_site.values().copied().fold(0.0, f64::max))
}

/// `M = max_x sum_{X ∋ x} int |z_x| d mu_X`.
pub fn first_moment(family: &PerturbationFamily) -> f64 {
    let mut per_site: BTreeMap<&Site, CompensatedSum> = BTreeMap::new();
    for m in &family.measures {
        for (i, site) in m.support().iter().enumerate() {
            let w: f64 = m.atoms().map(|(z, w)| z[i].norm() * w).sum();
            per_site.entry(site).or_default().add(w);
        }
    }
    per_site.values().map(CompensatedSum::value).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairMoment {
    pub kappa_a: f64,
    pub worst_pair: Option<(Site, Site)>,
    pub window: u32,
    /// Same supremum over pairs within `window / 2`.
    pub half_window_value: f64,
}

impl PairMoment {
    pub fn stabilized(&self, tolerance: f64) -> bool {
        (self.kappa_a - self.half_window_value).abs() <= tolerance * self.kappa_a.abs()
    }
}

/// `kappa_a = sup_{x1, x2} sum_{X ∋ x1, x2} int |z_x1| |z_x2| d mu_X / F_a(d(x1, x2))`
/// over sites with `|x| <= window`.
pub fn pair_moment(
    family: &PerturbationFamily,
    profile: &DecayProfile,
    window: u32,
) -> Result<PairMoment> {
    let (kappa_a, worst_pair) = pair_sup(family, profile, window)?;
    let (half_window_value, _) = pair_sup(family, profile, window / 2)?;
    Ok(PairMoment {
        kappa_a,
        worst_pair,
        window,
        half_window_value,
    })
}

fn pair_sup(
    family: &PerturbationFamily,
    profile: &DecayProfile,
    window: u32,
) -> Result<(f64, Option<(Site, Site)>)> {
    let sites: Vec<&Site> = family
        .active_sites()
        .into_iter()
        .filter(|s| s.l1_norm() <= u64::from(window))
        .collect();
    let mut best = (0.0, None);
    for (i, x1) in sites.iter().enumerate() {
        for x2 in &sites[i..] {
            let mut numerator = CompensatedSum::new();
            for m in &family.measures {
                if let (Some(p), Some(q)) = (m.position(x1), m.position(x2)) {
                    numerator.add(m.pair_weight(p, q));
                }
            }
            let d = family.geometry.distance(x1, x2)?;
            let ratio = numerator.value() / profile.at(d);
            if ratio > best.0 {
                best = (ratio, Some(((*x1).clone(), (*x2).clone())));
            }
        }
    }
    Ok(best)
}

/// Exponent growth from the perturbation in the perturbed Lieb-Robinson bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationGrowth {
    /// On-site family: `c_a kappa C_a`.
    OnSite { kappa: f64, convolution: f64 },
    /// Multi-site family: `c_a kappa_a C_a^2`.
    MultiSite { kappa_a: f64, convolution: f64 },
}

impl PerturbationGrowth {
    pub fn rate(&self, c_a: f64) -> f64 {
        match *self {
            PerturbationGrowth::OnSite { kappa, convolution } => c_a * kappa * convolution,
            PerturbationGrowth::MultiSite {
                kappa_a,
                convolution,
            } => c_a * kappa_a * convolution * convolution,
        }
    }
}

/// `c_a e^{(v_a + growth) |t|} sum_{x,y} |f(x)| |g(y)| F_a(d(x, y))`.
pub fn perturbed_bound(
    f: &Field,
    g: &Field,
    t: f64,
    cert: &DecayCertificate,
    growth: PerturbationGrowth,
    profile: &DecayProfile,
) -> Result<f64> {
    let pairing = crate::lieb_robinson::weighted_pairing(profile, f, g)?;
    Ok(cert.c_a * ((cert.v_a + growth.rate(cert.c_a)) * t.abs()).exp() * pairing)
}

/// Nested cubes `(-L_n, L_n]^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeSequence {
    dim: usize,
    half_sides: Vec<u32>,
}

impl VolumeSequence {
    pub fn new(dim: usize, half_sides: Vec<u32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if half_sides.is_empty() || half_sides[0] == 0 {
            return Err(Error::invalid("half_sides", "need a non-empty list of positive half-sides"));
        }
        if half_sides.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("half_sides", "must be strictly increasing"));
        }
        Ok(Self { dim, half_sides })
    }

    /// `L_n = 2^n` for `n` in `first..=last`.
    pub fn dyadic(dim: usize, first: u32, last: u32) -> Result<Self> {
        Self::new(dim, (first..=last).map(|n| 1u32 << n).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_sides(&self) -> &[u32] {
        &self.half_sides
    }

    pub fn len(&self) -> usize {
        self.half_sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.half_sides.is_empty()
    }

    pub fn half_side(&self, n: usize) -> Result<u32> {
        self.half_sides
            .get(n)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: n,
                len: self.half_sides.len(),
            })
    }

    /// Sites of the `n`-th cube, row-major.
    pub fn box_sites(&self, n: usize) -> Result<Vec<Site>> {
        let l = i64::from(self.half_side(n)?);
        let mut out = Vec::new();
        let mut coords = alloc::vec![-l + 1; self.dim];
        loop {
            out.push(Site::new(coords.clone()));
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return Ok(out);
                }
                axis -= 1;
                if coords[axis] < l {
                    coords[axis] += 1;
                    break;
                }
                coords[axis] = -l + 1;
            }
        }
    }
}

/// Inputs shared by the thermodynamic-limit tail estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConstants<'a> {
    pub first_moment: f64,
    pub cert: &'a DecayCertificate,
    pub growth: PerturbationGrowth,
    pub profile: &'a DecayProfile,
}

/// `M c_a |t| e^{(v_a + growth)|t|} sum_x |f(x)| sum_{y in large \ small} F_a(|x - y|)`.
pub fn convergence_tail_sets(
    f: &Field,
    small: &[Site],
    large: &[Site],
    t: f64,
    k: &TailConstants<'_>,
) -> Result<f64> {
    let small: BTreeSet<&Site> = small.iter().collect();
    let geometry = f.geometry();
    let mut shell = CompensatedSum::new();
    for (x, fx) in f.iter() {
        for y in large.iter().filter(|y| !small.contains(y)) {
            shell.add(fx.norm() * k.profile.at(geometry.distance(x, y)?));
        }
    }
    let c_a = k.cert.c_a;
    let exponent = (k.cert.v_a + k.growth.rate(c_a)) * t.abs();
    Ok(k.first_moment * c_a * t.abs() * exponent.exp() * shell.value())
}

/// Bound on `||tau_t^(Lambda_n)(W(f)) - tau_t^(Lambda_m)(W(f))||` for `m <= n`.
pub fn convergence_tail(
    f: &Field,
    seq: &VolumeSequence,
    n: usize,
    m: usize,
    t: f64,
    k: &TailConstants<'_>,
) -> Result<f64> {
    if n < m {
        return Err(Error::VolumeOrder { n, m });
    }
    if f.geometry().is_torus() {
        return Err(Error::WrongGeometry { expected: "infinite" });
    }
    let large = seq.box_sites(n)?;
    let small = seq.box_sites(m)?;
    convergence_tail_sets(f, &small, &large, t, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> LatticeGeometry {
        LatticeGeometry::infinite(1, 16).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cosine_second_and_first_moments() {
        let z = c(0.3, 0.4);
        let fam = PerturbationFamily::new(line(), [Site::from(0)])
            .unwrap()
            .with_measure(AtomicWeylMeasure::cosine(Site::from(0), z))
            .unwrap();
        assert!((second_moment(&fam).unwrap() - 2.0 * z.norm_sqr()).abs() < 1e-15);
        assert!((first_moment(&fam) - 2.0 * z.norm()).abs() < 1e-15);
        let empty = PerturbationFamily::new(line(), [Site::from(0)]).unwrap();
        assert_eq!(second_moment(&empty).unwrap(), 0.0);
        assert_eq!(first_moment(&empty), 0.0);
    }

    #[test]
    fn second_moment_takes_site_maximum() {
        let fam = PerturbationFamily::new(line(), [Site::from(0), Site::from(1)])
            .unwrap()
            .with_measure(AtomicWeylMeasure::cosine(Site::from(0), c(1.0, 0.0)))
            .unwrap()
            .with_measure(AtomicWeylMeasure::cosine(Site::from(1), c(0.0, 2.0)))
            .unwrap();
        assert_eq!(second_moment(&fam).unwrap(), 8.0);
    }

    #[test]
    fn multi_site_support_needs_pair_moment() {
        let m = AtomicWeylMeasure::new(
            alloc::vec![Site::from(0), Site::from(1)],
            alloc::vec![Atom {
                z: alloc::vec![c(1.0, 0.0), c(1.0, 0.0)],
                weight: 1.0
            }],
        )
        .unwrap();
        let fam = PerturbationFamily::new(line(), [Site::from(0), Site::from(1)])
            .unwrap()
            .with_measure(m)
            .unwrap();
        assert!(matches!(
            second_moment(&fam),
            Err(Error::NonSingletonSupport { .. })
        ));
        let profile = DecayProfile::with_default_epsilon(1, 0.5).unwrap();
        let pm = pair_moment(&fam, &profile, 4).unwrap();
        // Diagonal pairs give 2 / F_a(0) = 2, the off-diagonal pair 2 / F_a(1).
        assert!((pm.kappa_a - 2.0 / profile.at(1)).abs() < 1e-12);
        assert_eq!(pm.worst_pair, Some((Site::from(0), Site::from(1))));
    }

    #[test]
    fn explicit_atoms_must_be_even() {
        let support = alloc::vec![Site::from(0)];
        let z = c(0.2, -0.1);
        let even = AtomicWeylMeasure::from_explicit(
            support.clone(),
            alloc::vec![
                Atom { z: alloc::vec![z], weight: 0.5 },
                Atom { z: alloc::vec![-z], weight: 0.5 },
            ],
        )
        .unwrap();
        assert_eq!(even.representatives().len(), 1);
        let odd = AtomicWeylMeasure::from_explicit(
            support,
            alloc::vec![Atom { z: alloc::vec![z], weight: 0.5 }],
        );
        assert!(matches!(odd, Err(Error::OddMeasure { .. })));
    }

    #[test]
    fn mirrored_atoms_cancel() {
        let m = AtomicWeylMeasure::new(
            alloc::vec![Site::from(0), Site::from(2)],
            alloc::vec![
                Atom { z: alloc::vec![c(0.3, 0.1), c(-1.0, 2.0)], weight: 0.7 },
                Atom { z: alloc::vec![c(0.0, 0.5), c(0.25, 0.0)], weight: 1.5 },
            ],
        )
        .unwrap();
        let mut acc = [Complex64::new(0.0, 0.0); 2];
        for (z, w) in m.atoms() {
            for (a, v) in acc.iter_mut().zip(&z) {
                *a += v * w;
            }
        }
        assert_eq!(acc, [Complex64::new(0.0, 0.0); 2]);
    }

    #[test]
    fn family_rejects_terms_outside_volume() {
        let mut fam = PerturbationFamily::new(line(), [Site::from(0)]).unwrap();
        assert!(matches!(
            fam.push(AtomicWeylMeasure::cosine(Site::from(3), c(1.0, 0.0))),
            Err(Error::SiteOutsideVolume { .. })
        ));
    }

    #[test]
    fn tail_vanishes_on_equal_volumes_and_rejects_order() {
        let params = crate::harmonic::HarmonicParameters::new(1.0, [1.0]).unwrap();
        let profile = DecayProfile::with_default_epsilon(1, 1.0).unwrap();
        let cert = DecayCertificate::new(&params, &profile).unwrap();
        let k = TailConstants {
            first_moment: 0.4,
            cert: &cert,
            growth: PerturbationGrowth::OnSite {
                kappa: 0.08,
                convolution: 2.0,
            },
            profile: &profile,
        };
        let seq = VolumeSequence::dyadic(1, 2, 4).unwrap();
        let f = Field::delta(line(), Site::from(0), c(0.5, 0.0)).unwrap();
        assert_eq!(convergence_tail(&f, &seq, 1, 1, 0.5, &k).unwrap(), 0.0);
        assert_eq!(
            convergence_tail(&f, &seq, 0, 1, 0.5, &k),
            Err(Error::VolumeOrder { n: 0, m: 1 })
        );
        assert_eq!(seq.box_sites(0).unwrap().len(), 8);
    }
}
