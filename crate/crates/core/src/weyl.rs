//! Weyl operators as `(phase, label)` pairs and the quasi-free vacuum.
//!
//! `W(f) W(g) = e^{-i sigma(f, g) / 2} W(f + g)`, `W(f)* = W(-f)` and the
//! harmonic dynamics acts by `tau_t(W(f)) = W(T_t f)`.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{symplectic_form, Field};
use crate::harmonic::{HarmonicDynamics, HarmonicParameters, TorusModes};
use crate::lattice::LatticeGeometry;
use crate::lieb_robinson::chord;

/// Tolerance on `|phase| - 1` accepted by [`WeylOperator::new`].
pub const PHASE_TOLERANCE: f64 = 1e-12;

/// `phase * W(label)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylOperator {
    phase: Complex64,
    label: Field,
}

fn unit(z: Complex64) -> Complex64 {
    z / z.norm()
}

fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

impl WeylOperator {
    pub fn new(phase: Complex64, label: Field) -> Result<Self> {
        if !((phase.norm() - 1.0).abs() <= PHASE_TOLERANCE) {
            return Err(Error::invalid("phase", "must have unit modulus"));
        }
        Ok(Self {
            phase: unit(phase),
            label,
        })
    }

    /// `W(label)` with phase 1.
    pub fn from_label(label: Field) -> Self {
        Self {
            phase: Complex64::new(1.0, 0.0),
            label,
        }
    }

    pub fn identity(geometry: LatticeGeometry) -> Self {
        Self::from_label(Field::zero(geometry))
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn label(&self) -> &Field {
        &self.label
    }

    /// Zero label (up to `tol` in every entry) and phase 1 (up to `tol`).
    pub fn is_identity(&self, tol: f64) -> bool {
        (self.phase - 1.0).norm() <= tol && self.label.iter().all(|(_, v)| v.norm() <= tol)
    }
}

/// `A B`, with the phase renormalized to unit modulus.
pub fn multiply(a: &WeylOperator, b: &WeylOperator) -> Result<WeylOperator> {
    let sigma = symplectic_form(&a.label, &b.label)?;
    Ok(WeylOperator {
        phase: unit(a.phase * b.phase * cis(-0.5 * sigma)),
        label: a.label.add(&b.label)?,
    })
}

/// Left fold of [`multiply`] over a non-empty word.
pub fn reduce_word(word: &[WeylOperator]) -> Result<WeylOperator> {
    let (first, rest) = word
        .split_first()
        .ok_or_else(|| Error::invalid("word", "must be non-empty"))?;
    rest.iter().try_fold(first.clone(), |acc, op| multiply(&acc, op))
}

pub fn adjoint(a: &WeylOperator) -> WeylOperator {
    WeylOperator {
        phase: a.phase.conj(),
        label: a.label.neg(),
    }
}

/// `tau_t(A)`: the label moves by `T_t`, the phase is unchanged.
pub fn free_evolve(a: &WeylOperator, dynamics: &HarmonicDynamics, t: f64) -> Result<WeylOperator> {
    Ok(WeylOperator {
        phase: a.phase,
        label: dynamics.evolve(&a.label, t)?,
    })
}

/// `||[tau_t(W(f)), W(g)]|| = |1 - e^{i sigma(T_t f, g)}|`.
pub fn commutator_norm(f: &Field, g: &Field, dynamics: &HarmonicDynamics, t: f64) -> Result<f64> {
    let evolved = dynamics.evolve(f, t)?;
    Ok(chord(symplectic_form(&evolved, g)?))
}

/// Handling of labels outside the massless domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainConvention {
    /// Return [`Error::ZeroModeViolation`].
    #[default]
    Signal,
    /// Evaluate to 0, the extended-value convention.
    Zero,
}

/// The vacuum `rho(W(f)) = exp(-||(U* - V*) f||^2 / 4)` on a torus.
#[derive(Debug, Clone)]
pub struct QuasiFreeState {
    params: HarmonicParameters,
    modes: TorusModes,
    convention: DomainConvention,
}

impl QuasiFreeState {
    pub fn new(params: HarmonicParameters, geometry: LatticeGeometry) -> Result<Self> {
        let modes = TorusModes::new(&params, geometry)?;
        Ok(Self {
            params,
            modes,
            convention: DomainConvention::Signal,
        })
    }

    pub fn with_convention(mut self, convention: DomainConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn params(&self) -> &HarmonicParameters {
        &self.params
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        self.modes.geometry()
    }

    pub fn convention(&self) -> DomainConvention {
        self.convention
    }

    /// `T_t f` on the state's torus.
    pub fn evolve(&self, f: &Field, t: f64) -> Result<Field> {
        self.modes.evolve(f, t)
    }

    /// `||(U* - V*) f||^2`; `None` for an out-of-domain label under
    /// [`DomainConvention::Zero`].
    pub fn exponent(&self, f: &Field) -> Result<Option<f64>> {
        match self.modes.state_exponent(f) {
            Ok(v) => Ok(Some(v)),
            Err(Error::ZeroModeViolation { .. }) if self.convention == DomainConvention::Zero => {
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    fn gaussian(&self, f: &Field) -> Result<f64> {
        Ok(self.exponent(f)?.map_or(0.0, |e| (-0.25 * e).exp()))
    }
}

/// `rho(A) = phase * exp(-||(U* - V*) f||^2 / 4)`.
pub fn state_eval(state: &QuasiFreeState, a: &WeylOperator) -> Result<Complex64> {
    Ok(a.phase * state.gaussian(&a.label)?)
}

/// `rho(W(g1) W(T_t f) W(g2))`.
///
/// The phase follows from the Weyl relation:
/// `e^{-i sigma(g1, g2)/2} e^{-i sigma(T_t f, g2 - g1)/2}`.
pub fn three_point(
    state: &QuasiFreeState,
    g1: &Field,
    f: &Field,
    g2: &Field,
    t: f64,
) -> Result<Complex64> {
    let tf = state.evolve(f, t)?;
    let phase = -0.5 * (symplectic_form(g1, g2)? + symplectic_form(&tf, &g2.sub(g1)?)?);
    let total = g1.add(g2)?.add(&tf)?;
    Ok(cis(phase) * state.gaussian(&total)?)
}

/// Modulus of continuity of `t -> three_point(t)` at several resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityScan {
    pub t_start: f64,
    pub t_end: f64,
    /// `(h, max_i |F(t_i + h) - F(t_i)|)` for each requested step count.
    pub modulus: Vec<(f64, f64)>,
}

impl ContinuityScan {
    /// `modulus[i] / modulus[i + 1]` for consecutive resolutions.
    pub fn ratios(&self) -> Vec<f64> {
        self.modulus.windows(2).map(|w| w[0].1 / w[1].1).collect()
    }
}

/// Scans `three_point` on uniform grids of `[t_start, t_end]` with each of `steps` intervals.
pub fn continuity_scan(
    state: &QuasiFreeState,
    g1: &Field,
    f: &Field,
    g2: &Field,
    t_start: f64,
    t_end: f64,
    steps: &[u32],
) -> Result<ContinuityScan> {
    if !(t_end > t_start) || steps.contains(&0) {
        return Err(Error::invalid("steps", "need t_end > t_start and positive step counts"));
    }
    let mut modulus = Vec::with_capacity(steps.len());
    for &n in steps {
        let h = (t_end - t_start) / f64::from(n);
        let mut prev = three_point(state, g1, f, g2, t_start)?;
        let mut worst = 0.0f64;
        for i in 1..=n {
            let next = three_point(state, g1, f, g2, t_start + h * f64::from(i))?;
            worst = worst.max((next - prev).norm());
            prev = next;
        }
        modulus.push((h, worst));
    }
    Ok(ContinuityScan {
        t_start,
        t_end,
        modulus,
    })
}
