//! Bounded finite-range interactions `Phi(X)` and the norm `||Phi||_a`.

use std::collections::BTreeMap;

use lrlattice_core::DecayProfile;

use crate::config::FockConfig;
use crate::error::{OracleError, Result};
use crate::local::embed;
use crate::operator::{DenseOperator, Hermitian};

/// `X -> Phi(X)`, each term a self-adjoint matrix on `(C^{N+1})^{(x) |X|}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundedInteraction {
    terms: BTreeMap<Vec<usize>, Hermitian>,
}

impl BoundedInteraction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `op` to `Phi(support)`; `support` must be ascending and distinct.
    pub fn insert(&mut self, support: Vec<usize>, op: Hermitian) -> Result<()> {
        if support.is_empty() || support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OracleError::config("support", "must be non-empty, ascending and distinct"));
        }
        match self.terms.remove(&support) {
            Some(old) => {
                let sum = old.add(&op)?;
                self.terms.insert(support, Hermitian::new_unchecked(sum));
            }
            None => {
                self.terms.insert(support, op);
            }
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Hermitian)> {
        self.terms.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(x, op)| (x.clone(), Hermitian::new_unchecked(op.scale(c.into()))))
                .collect(),
        }
    }

    /// Terms supported in the first `sites` sites.
    pub fn restrict(&self, sites: usize) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(x, _)| x.iter().all(|&s| s < sites))
                .map(|(x, op)| (x.clone(), op.clone()))
                .collect(),
        }
    }

    /// `sum_X Phi(X)` on the whole chain.
    pub fn matrix(&self, config: &FockConfig) -> Result<Hermitian> {
        let mut total = DenseOperator::zeros(config.dim());
        for (support, op) in &self.terms {
            total = total.add(&embed(config, support, op.mat())?)?;
        }
        Ok(Hermitian::new_unchecked(total))
    }
}

/// `sup_{x, y} sum_{X ∋ x, y} ||Phi(X)|| / F_a(d(x, y))` over the chain's sites.
pub fn interaction_norm_a(
    interaction: &BoundedInteraction,
    profile: &DecayProfile,
    config: &FockConfig,
) -> Result<f64> {
    let norms: Vec<(&Vec<usize>, f64)> = interaction
        .terms
        .iter()
        .map(|(x, op)| Ok((x, op.norm()?)))
        .collect::<Result<_>>()?;
    let mut best = 0.0f64;
    for x in 0..config.sites() {
        for y in x..config.sites() {
            let sum: f64 = norms
                .iter()
                .filter(|(s, _)| s.contains(&x) && s.contains(&y))
                .map(|(_, n)| n)
                .sum();
            best = best.max(sum / profile.at(config.distance(x, y)));
        }
    }
    Ok(best)
}
