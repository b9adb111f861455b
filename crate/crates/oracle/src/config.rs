//! Truncated Fock space of a short oscillator chain.

use lrlattice_core::{HarmonicParameters, LatticeGeometry, Site};
use serde::Serialize;

use crate::error::{OracleError, Result};

/// Largest Fock space dimension an oracle run may allocate.
pub const MAX_DIMENSION: usize = 250_000;

/// Largest number of sites.
pub const MAX_SITES: usize = 3;

/// Total boson number spanning the default probe subspace.
pub const DEFAULT_PROBE: usize = 4;

/// States with some site occupation above `cutoff - LEAKAGE_MARGIN` count as leaked.
pub const LEAKAGE_MARGIN: usize = 5;

pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Ring: bonds `(x, x + 1 mod n)` for every `x`, so `n = 2` carries the
    /// bond `(q_0 - q_1)^2` twice.
    Periodic,
    /// Chain: bonds `(x, x + 1)` for `x + 1 < n`.
    Open,
}

/// `n` oscillators, each restricted to boson numbers `0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockConfig {
    sites: usize,
    cutoff: usize,
    params: HarmonicParameters,
    boundary: Boundary,
    probe: usize,
}

impl FockConfig {
    /// Periodic configuration with the default probe subspace.
    pub fn new(sites: usize, cutoff: usize, params: HarmonicParameters) -> Result<Self> {
        if !(1..=MAX_SITES).contains(&sites) {
            return Err(OracleError::config("sites", format!("must be in 1..={MAX_SITES}, got {sites}")));
        }
        if cutoff < 1 {
            return Err(OracleError::config("cutoff", "must be at least 1"));
        }
        if params.dim() != 1 {
            return Err(OracleError::config("params", "the oracle chain is one-dimensional"));
        }
        let dim = (cutoff + 1)
            .checked_pow(sites as u32)
            .filter(|&d| d <= MAX_DIMENSION)
            .ok_or(OracleError::DimensionGuard {
                dim: (cutoff + 1).saturating_pow(sites as u32),
                limit: MAX_DIMENSION,
            })?;
        debug_assert!(dim <= MAX_DIMENSION);
        Ok(Self {
            sites,
            cutoff,
            params,
            boundary: Boundary::Periodic,
            probe: DEFAULT_PROBE.min(cutoff),
        })
    }

    /// `N = 60` up to two sites, `N = 14` for three.
    pub fn default_cutoff(sites: usize) -> usize {
        if sites <= 2 {
            60
        } else {
            14
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Probe subspace: basis states with total boson number `<= probe`.
    pub fn with_probe(mut self, probe: usize) -> Result<Self> {
        if probe > self.cutoff {
            return Err(OracleError::config("probe", "must not exceed the cutoff"));
        }
        self.probe = probe;
        Ok(self)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn params(&self) -> &HarmonicParameters {
        &self.params
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn probe(&self) -> usize {
        self.probe
    }

    /// Single-site dimension `N + 1`.
    pub fn local_dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.sites as u32)
    }

    /// Bonds `(x, y)` with multiplicity.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.sites;
        match self.boundary {
            Boundary::Open => (0..n.saturating_sub(1)).map(|x| (x, x + 1)).collect(),
            Boundary::Periodic if n == 1 => Vec::new(),
            Boundary::Periodic => (0..n).map(|x| (x, (x + 1) % n)).collect(),
        }
    }

    /// Graph distance on the ring or chain.
    pub fn distance(&self, x: usize, y: usize) -> u64 {
        let d = x.abs_diff(y);
        let d = match self.boundary {
            Boundary::Periodic => d.min(self.sites - d),
            Boundary::Open => d,
        };
        d as u64
    }

    /// Occupation numbers of a basis index; site 0 is the most significant digit.
    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let d = self.local_dim();
        let mut occ = vec![0; self.sites];
        for slot in occ.iter_mut().rev() {
            *slot = index % d;
            index /= d;
        }
        occ
    }

    pub fn index(&self, occupations: &[usize]) -> usize {
        occupations
            .iter()
            .fold(0, |acc, &n| acc * self.local_dim() + n)
    }

    /// Stride of site `x` in the basis index.
    pub(crate) fn stride(&self, x: usize) -> usize {
        self.local_dim().pow((self.sites - 1 - x) as u32)
    }

    pub fn total_number(&self, index: usize) -> usize {
        self.occupations(index).iter().sum()
    }

    /// Basis indices of the probe subspace, ascending.
    pub fn probe_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.total_number(i) <= self.probe)
            .collect()
    }

    /// Oracle site of a lattice site. On a torus geometry the torus must have
    /// exactly `n` sites and the boundary must be periodic; on an infinite
    /// geometry the coordinate must lie in `0..n`.
    pub fn site_index(&self, geometry: &LatticeGeometry, site: &Site) -> Result<usize> {
        let outside = || OracleError::SiteNotInVolume {
            site: site.coords().to_vec(),
            sites: self.sites,
        };
        if geometry.dim() != 1 {
            return Err(OracleError::config("geometry", "the oracle chain is one-dimensional"));
        }
        if geometry.is_torus() {
            if self.boundary != Boundary::Periodic || geometry.num_sites() != Some(self.sites) {
                return Err(OracleError::config(
                    "geometry",
                    format!("torus must have {} sites and periodic boundary", self.sites),
                ));
            }
            return Ok(geometry.torus_index(site)?);
        }
        let x = site.coords()[0];
        usize::try_from(x)
            .ok()
            .filter(|&x| x < self.sites)
            .ok_or_else(outside)
    }

    /// Lattice site of an oracle site on an infinite geometry.
    pub fn lattice_site(&self, x: usize) -> Site {
        Site::from(x as i64)
    }
}
