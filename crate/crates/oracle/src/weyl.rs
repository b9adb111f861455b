//! Weyl matrices `W(f) = exp(i sum_x Re f(x) q_x + Im f(x) p_x)`.

use faer::{c64, Mat};
use lrlattice_core::Field;

use crate::config::{FockConfig, LEAKAGE_LIMIT};
use crate::error::{OracleError, Result};
use crate::local::{apply_embedded, site_weyl, vacuum_leakage_sq};
use crate::operator::{DenseOperator, Unitary};

/// `W(f)` as a product of commuting single-site factors.
#[derive(Debug, Clone)]
pub struct WeylFactors {
    config: FockConfig,
    factors: Vec<(usize, Mat<c64>)>,
}

impl WeylFactors {
    /// Factors of `W(f)` for a field whose sites map into the chain.
    pub fn new(config: &FockConfig, f: &Field) -> Result<Self> {
        let mut values = vec![c64::new(0.0, 0.0); config.sites()];
        for (site, &v) in f.iter() {
            values[config.site_index(f.geometry(), site)?] += v;
        }
        Self::from_values(config, &values)
    }

    /// Factors for `f(x) = values[x]`.
    pub fn from_values(config: &FockConfig, values: &[c64]) -> Result<Self> {
        if values.len() != config.sites() {
            return Err(OracleError::DimensionMismatch {
                expected: config.sites(),
                found: values.len(),
            });
        }
        let mut factors = Vec::new();
        for (x, &z) in values.iter().enumerate() {
            if z != c64::new(0.0, 0.0) {
                factors.push((x, site_weyl(config.cutoff(), z)?));
            }
        }
        Ok(Self {
            config: config.clone(),
            factors,
        })
    }

    /// `||(1 - Pi) W(f) Omega||`, with `Pi` the projector onto occupations
    /// `<= cutoff - LEAKAGE_MARGIN` at every site.
    pub fn leakage(&self) -> f64 {
        // P(some site leaks) for independent sites.
        let union = self
            .factors
            .iter()
            .map(|(_, w)| vacuum_leakage_sq(w.as_ref()))
            .fold(0.0, |acc, p| acc + p - acc * p);
        union.max(0.0).sqrt()
    }

    /// Fails with [`OracleError::Leakage`] above [`LEAKAGE_LIMIT`].
    pub fn check_leakage(&self) -> Result<()> {
        let leakage = self.leakage();
        if leakage > LEAKAGE_LIMIT {
            return Err(OracleError::Leakage {
                leakage,
                limit: LEAKAGE_LIMIT,
            });
        }
        Ok(())
    }

    /// In-place `x <- W(f) x`.
    pub fn apply(&self, x: &mut Mat<c64>) -> Result<()> {
        for (site, w) in &self.factors {
            apply_embedded(&self.config, &[*site], w.as_ref(), x)?;
        }
        Ok(())
    }

    /// Dense `W(f)`.
    pub fn to_matrix(&self) -> Result<Unitary> {
        let mut m = Mat::<c64>::identity(self.config.dim(), self.config.dim());
        self.apply(&mut m)?;
        Ok(Unitary::new_unchecked(DenseOperator::from_mat_unchecked(m)))
    }
}

/// Dense `W(f)`, rejected when the truncation leaks.
pub fn weyl_matrix(config: &FockConfig, f: &Field) -> Result<Unitary> {
    let factors = WeylFactors::new(config, f)?;
    factors.check_leakage()?;
    factors.to_matrix()
}
