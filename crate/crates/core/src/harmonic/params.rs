use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};

/// On-site frequency `omega` and nearest-neighbour couplings `lambda_j` of
/// `H = sum_x p_x^2 + omega^2 q_x^2 + sum_j lambda_j (q_x - q_{x+e_j})^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicParameters {
    omega: f64,
    lambda: Vec<f64>,
}

impl HarmonicParameters {
    pub fn new(omega: f64, lambda: impl Into<Vec<f64>>) -> Result<Self> {
        let lambda = lambda.into();
        if lambda.is_empty() {
            return Err(Error::invalid("lambda", "need one coupling per dimension (d >= 1)"));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::invalid("omega", "must be finite and non-negative"));
        }
        if lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::invalid("lambda", "couplings must be finite and non-negative"));
        }
        let params = Self { omega, lambda };
        if params.c() <= 0.0 {
            return Err(Error::invalid(
                "omega",
                "omega^2 + 4 sum lambda must be positive (a fully decoupled massless chain has no dynamics bound)",
            ));
        }
        Ok(params)
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `c = (omega^2 + 4 sum_j lambda_j)^{1/2}`, the maximum of the dispersion.
    pub fn c(&self) -> f64 {
        (self.omega * self.omega + 4.0 * self.lambda.iter().sum::<f64>()).sqrt()
    }

    /// `gamma(k)^2 = omega^2 + 4 sum_j lambda_j sin^2(k_j / 2)`.
    pub fn gamma_sq(&self, k: &[f64]) -> f64 {
        debug_assert_eq!(k.len(), self.dim());
        self.omega * self.omega
            + 4.0
                * self
                    .lambda
                    .iter()
                    .zip(k)
                    .map(|(l, kj)| {
                        let s = (0.5 * kj).sin();
                        l * s * s
                    })
                    .sum::<f64>()
    }

    /// The dispersion relation `gamma(k)`.
    pub fn gamma(&self, k: &[f64]) -> f64 {
        self.gamma_sq(k).sqrt()
    }

    /// `Gamma_pm(k) = gamma^{-1/2} pm gamma^{1/2}`.
    pub fn bogoliubov_multipliers(&self, k: &[f64]) -> Result<BogoliubovMultipliers> {
        BogoliubovMultipliers::from_gamma(self.gamma(k)).ok_or_else(|| Error::SingularMultiplier {
            k: k.to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovMultipliers {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

impl BogoliubovMultipliers {
    /// `None` when `gamma = 0`.
    pub fn from_gamma(gamma: f64) -> Option<Self> {
        if !(gamma > 0.0) {
            return None;
        }
        let root = gamma.sqrt();
        Some(Self {
            gamma_plus: 1.0 / root + root,
            gamma_minus: 1.0 / root - root,
        })
    }

    /// `(Gamma_+^2 - Gamma_-^2) / 4`, identically 1.
    pub fn bogoliubov_identity(&self) -> f64 {
        0.25 * (self.gamma_plus * self.gamma_plus - self.gamma_minus * self.gamma_minus)
    }
}
