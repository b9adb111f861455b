//! Finitely supported complex fields on a lattice: the labels of Weyl operators.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, Site};
use crate::sum::{CompensatedComplexSum, CompensatedSum};

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    geometry: LatticeGeometry,
    entries: BTreeMap<Site, Complex64>,
}

impl Field {
    pub fn zero(geometry: LatticeGeometry) -> Self {
        Self {
            geometry,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a field from `(site, value)` pairs; repeated sites accumulate.
    pub fn from_entries<I>(geometry: LatticeGeometry, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Site, Complex64)>,
    {
        let mut field = Self::zero(geometry);
        for (site, value) in entries {
            geometry.check_site(&site)?;
            *field.entries.entry(site).or_insert_with(Complex64::zero) += value;
        }
        Ok(field)
    }

    /// `value * delta_site`.
    pub fn delta(geometry: LatticeGeometry, site: Site, value: Complex64) -> Result<Self> {
        Self::from_entries(geometry, [(site, value)])
    }

    /// Reads a dense row-major torus array (see [`LatticeGeometry::torus_index`]).
    pub fn from_torus_values(geometry: LatticeGeometry, values: &[Complex64]) -> Result<Self> {
        let n = geometry
            .num_sites()
            .ok_or(Error::WrongGeometry { expected: "torus" })?;
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.len(),
            });
        }
        let mut entries = BTreeMap::new();
        for (i, &v) in values.iter().enumerate() {
            if v != Complex64::zero() {
                entries.insert(geometry.torus_site(i)?, v);
            }
        }
        Ok(Self { geometry, entries })
    }

    /// Dense row-major torus array.
    pub fn to_torus_values(&self) -> Result<Vec<Complex64>> {
        let n = self
            .geometry
            .num_sites()
            .ok_or(Error::WrongGeometry { expected: "torus" })?;
        let mut out = alloc::vec![Complex64::zero(); n];
        for (site, &v) in &self.entries {
            out[self.geometry.torus_index(site)?] = v;
        }
        Ok(out)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn get(&self, site: &Site) -> Complex64 {
        self.entries.get(site).copied().unwrap_or_else(Complex64::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, &Complex64)> + Clone {
        self.entries.iter()
    }

    /// Sites carrying an entry (including explicit zeros).
    pub fn support(&self) -> impl Iterator<Item = &Site> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `|x|` over the support (0 for the zero field).
    pub fn support_radius(&self) -> u64 {
        self.entries.keys().map(Site::l1_norm).max().unwrap_or(0)
    }

    fn check_same(&self, other: &Field) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::GeometryMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.check_same(other)?;
        let mut entries = self.entries.clone();
        for (site, &v) in &other.entries {
            *entries.entry(site.clone()).or_insert_with(Complex64::zero) += v;
        }
        Ok(Field {
            geometry: self.geometry,
            entries,
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Field {
        self.map(|v| -v)
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    /// Multiplication by a complex scalar. The harmonic flow only commutes
    /// with real scalars.
    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|v| v * c)
    }

    pub fn real_part(&self) -> Field {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn imag_part(&self) -> Field {
        self.map(|v| Complex64::new(v.im, 0.0))
    }

    fn map(&self, op: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            geometry: self.geometry,
            entries: self
                .entries
                .iter()
                .map(|(s, &v)| (s.clone(), op(v)))
                .collect(),
        }
    }

    pub fn norm_l1(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).collect::<CompensatedSum>().value()
    }

    pub fn norm_l2(&self) -> f64 {
        self.entries
            .values()
            .map(|v| v.norm_sqr())
            .collect::<CompensatedSum>()
            .value()
            .sqrt()
    }

    /// `<f, g> = sum_x conj(f(x)) g(x)`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_same(other)?;
        let mut acc = CompensatedComplexSum::new();
        for (site, &fv) in &self.entries {
            if let Some(&gv) = other.entries.get(site) {
                acc.add(fv.conj() * gv);
            }
        }
        Ok(acc.value())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        Ok(self
            .sub(other)?
            .entries
            .values()
            .fold(0.0, |m, v| m.max(v.norm())))
    }

    /// Entries restricted to `|x| <= radius`.
    pub fn restrict_to_ball(&self, radius: u64) -> Field {
        Field {
            geometry: self.geometry,
            entries: self
                .entries
                .iter()
                .filter(|(s, _)| s.l1_norm() <= radius)
                .map(|(s, &v)| (s.clone(), v))
                .collect(),
        }
    }
}

/// `sigma(f, g) = Im <f, g>`.
pub fn symplectic_form(f: &Field, g: &Field) -> Result<f64> {
    Ok(f.inner(g)?.im)
}
