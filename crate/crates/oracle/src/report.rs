//! JSON-ready oracle reports.

use lrlattice_core::{Field, HarmonicParameters};
use serde::Serialize;

use crate::config::{Boundary, FockConfig};
use crate::error::Result;
use crate::model::{commutator_oracle, FockModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub sites: usize,
    pub cutoff: usize,
    pub omega: f64,
    pub lambda: f64,
    pub boundary: Boundary,
    pub probe: usize,
}

impl From<&FockConfig> for ConfigSummary {
    fn from(c: &FockConfig) -> Self {
        Self {
            sites: c.sites(),
            cutoff: c.cutoff(),
            omega: c.params().omega(),
            lambda: c.params().lambda()[0],
            boundary: c.boundary(),
            probe: c.probe(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffPoint {
    pub cutoff: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    /// Configuration at the largest cutoff.
    pub config: ConfigSummary,
    pub quantity: String,
    pub value: f64,
    /// Change between the two largest cutoffs (0 for a single cutoff).
    pub error_estimate: f64,
    pub cutoff_study: Vec<CutoffPoint>,
}

impl OracleReport {
    /// Report from values at increasing cutoffs.
    pub fn from_study(config: &FockConfig, quantity: impl Into<String>, study: Vec<CutoffPoint>) -> Self {
        let value = study.last().map_or(f64::NAN, |p| p.value);
        let error_estimate = match study.as_slice() {
            [.., a, b] => (b.value - a.value).abs(),
            _ => 0.0,
        };
        Self {
            config: config.into(),
            quantity: quantity.into(),
            value,
            error_estimate,
            cutoff_study: study,
        }
    }
}

/// [`commutator_oracle`] on a periodic chain at each cutoff in `cutoffs`.
pub fn commutator_study(
    sites: usize,
    params: &HarmonicParameters,
    f: &Field,
    g: &Field,
    t: f64,
    cutoffs: &[usize],
) -> Result<OracleReport> {
    let mut study = Vec::with_capacity(cutoffs.len());
    let mut last = None;
    for &cutoff in cutoffs {
        let config = FockConfig::new(sites, cutoff, params.clone())?;
        let model = FockModel::new(config.clone())?;
        study.push(CutoffPoint {
            cutoff,
            value: commutator_oracle(&model, f, g, t)?,
        });
        last = Some(config);
    }
    let config = match last {
        Some(c) => c,
        None => FockConfig::new(sites, 1, params.clone())?,
    };
    Ok(OracleReport::from_study(&config, "commutator_norm", study))
}
