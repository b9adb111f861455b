//! Exact finite-volume dynamics from cached eigendecompositions.

use faer::{c64, Mat, MatRef};
use lrlattice_core::perturbations::PerturbationFamily;
use lrlattice_core::Field;

use crate::config::{FockConfig, LEAKAGE_LIMIT, LEAKAGE_MARGIN};
use crate::error::{OracleError, Result};
use crate::hamiltonian::{build_hamiltonian, hamiltonian_entries};
use crate::interaction::BoundedInteraction;
use crate::local::{apply_embedded, embed, site_weyl};
use crate::operator::{spectral_norm, DenseOperator, Hermitian};
use crate::spectrum::Spectrum;
use crate::weyl::WeylFactors;

/// Self-adjoint addition to the harmonic Hamiltonian.
#[derive(Debug, Clone, Copy)]
pub enum Coupling<'a> {
    Harmonic,
    /// `P = sum_X int W(z . delta_X) d mu_X(z)` over the family's measures.
    Family(&'a PerturbationFamily),
    Interaction(&'a BoundedInteraction),
}

impl Coupling<'_> {
    fn matrix(&self, config: &FockConfig) -> Result<Option<Hermitian>> {
        match self {
            Coupling::Harmonic => Ok(None),
            Coupling::Family(f) => perturbation_matrix(config, f).map(Some),
            Coupling::Interaction(i) => i.matrix(config).map(Some),
        }
    }
}

fn parity(config: &FockConfig) -> impl Fn(usize) -> usize + '_ {
    move |i| config.total_number(i) % 2
}

/// Truncated Hamiltonian (plus an optional coupling) with its spectrum.
#[derive(Debug, Clone)]
pub struct FockModel {
    config: FockConfig,
    spectrum: Spectrum,
}

impl FockModel {
    /// Harmonic chain.
    pub fn new(config: FockConfig) -> Result<Self> {
        let entries = hamiltonian_entries(&config);
        let spectrum = Spectrum::from_real_entries(config.dim(), &entries, &parity(&config))?;
        Ok(Self { config, spectrum })
    }

    /// Harmonic chain plus `coupling`.
    pub fn with_coupling(config: FockConfig, coupling: Coupling<'_>) -> Result<Self> {
        match coupling.matrix(&config)? {
            None => Self::new(config),
            Some(p) => {
                let h = build_hamiltonian(&config)?.add(&p)?;
                let spectrum = Spectrum::from_hermitian(&Hermitian::new_unchecked(h), &parity(&config))?;
                Ok(Self { config, spectrum })
            }
        }
    }

    pub fn config(&self) -> &FockConfig {
        &self.config
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// `e^{-itH} x`.
    pub fn propagate(&self, x: MatRef<'_, c64>, t: f64) -> Mat<c64> {
        self.spectrum.propagate(x, t)
    }

    /// `tau_t(A) = e^{itH} A e^{-itH}`.
    pub fn heisenberg_evolve(&self, a: &DenseOperator, t: f64) -> Result<DenseOperator> {
        if a.dim() != self.config.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: self.config.dim(),
                found: a.dim(),
            });
        }
        Ok(self.spectrum.conjugate(a, t))
    }

    /// `tau_t(A) x` for an operator given by its action.
    pub fn evolve_applied(
        &self,
        apply: impl Fn(&mut Mat<c64>) -> Result<()>,
        x: MatRef<'_, c64>,
        t: f64,
    ) -> Result<Mat<c64>> {
        let mut y = self.propagate(x, t);
        apply(&mut y)?;
        Ok(self.propagate(y.as_ref(), -t))
    }
}

/// `e^{itH} A e^{-itH}` with the model's cached spectrum.
pub fn heisenberg_evolve(model: &FockModel, a: &DenseOperator, t: f64) -> Result<DenseOperator> {
    model.heisenberg_evolve(a, t)
}

/// Columns of the identity on the probe subspace.
pub fn probe_basis(config: &FockConfig) -> Mat<c64> {
    let idx = config.probe_indices();
    let mut m = Mat::<c64>::zeros(config.dim(), idx.len());
    for (j, &i) in idx.iter().enumerate() {
        m[(i, j)] = c64::new(1.0, 0.0);
    }
    m
}

/// `P^Lambda = sum_X sum_atoms w W(z . delta_X)` as a matrix.
///
/// Each mirror atom is added as `Pi W Pi` with `Pi` the boson parity, so the
/// result commutes with `Pi` exactly.
pub fn perturbation_matrix(config: &FockConfig, family: &PerturbationFamily) -> Result<Hermitian> {
    let dim = config.dim();
    let sign: Vec<f64> = (0..dim)
        .map(|i| if config.total_number(i) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let mut total = Mat::<c64>::zeros(dim, dim);
    for measure in family.measures() {
        let mut support: Vec<(usize, usize)> = measure
            .support()
            .iter()
            .enumerate()
            .map(|(k, s)| Ok((config.site_index(family.geometry(), s)?, k)))
            .collect::<Result<_>>()?;
        support.sort_unstable();
        let sites: Vec<usize> = support.iter().map(|s| s.0).collect();
        for atom in measure.representatives() {
            let mut local = Mat::<c64>::identity(1, 1);
            for &(_, k) in &support {
                let w = site_weyl(config.cutoff(), atom.z[k])?;
                local = kron(local.as_ref(), w.as_ref());
            }
            let m = embed(config, &sites, local.as_ref())?;
            let m = m.mat();
            for i in 0..dim {
                for j in 0..dim {
                    let v = m[(i, j)];
                    total[(i, j)] += (v + v * (sign[i] * sign[j])) * atom.weight;
                }
            }
        }
    }
    Hermitian::new(DenseOperator::from_mat(total)?, 1e-12)
}

fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (m, n) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * m, a.ncols() * n, |i, j| a[(i / m, j / n)] * b[(i % m, j % n)])
}

/// Result of [`perturbed_evolve`].
#[derive(Debug, Clone)]
pub struct PerturbedEvolution {
    /// `alpha_t^P(A)`.
    pub perturbed: DenseOperator,
    /// `alpha_t(A)`.
    pub unperturbed: DenseOperator,
    /// `||P||`.
    pub perturbation_norm: f64,
    /// `||alpha_t^P(A) - alpha_t(A) - i int_0^t alpha_s^P([P, alpha_{t-s}(A)]) ds||`
    /// with composite Simpson quadrature.
    pub residual: f64,
    pub quad_steps: usize,
}

/// Harmonic and perturbed dynamics on the same chain.
#[derive(Debug, Clone)]
pub struct DysonCheck {
    free: FockModel,
    perturbed: FockModel,
    p: Hermitian,
}

impl DysonCheck {
    pub fn new(config: &FockConfig, family: &PerturbationFamily) -> Result<Self> {
        let p = perturbation_matrix(config, family)?;
        let free = FockModel::new(config.clone())?;
        let h = build_hamiltonian(config)?.add(&p)?;
        let spectrum = Spectrum::from_hermitian(&Hermitian::new_unchecked(h), &parity(config))?;
        let perturbed = FockModel {
            config: config.clone(),
            spectrum,
        };
        Ok(Self { free, perturbed, p })
    }

    pub fn perturbation(&self) -> &Hermitian {
        &self.p
    }

    pub fn free(&self) -> &FockModel {
        &self.free
    }

    pub fn perturbed(&self) -> &FockModel {
        &self.perturbed
    }

    pub fn evolve(&self, a: &DenseOperator, t: f64, quad_steps: usize) -> Result<PerturbedEvolution> {
        if quad_steps < 2 || quad_steps % 2 != 0 {
            return Err(OracleError::config("quad_steps", "Simpson needs an even count >= 2"));
        }
        let perturbed = self.perturbed.heisenberg_evolve(a, t)?;
        let unperturbed = self.free.heisenberg_evolve(a, t)?;
        let h = t / quad_steps as f64;
        let mut integral = DenseOperator::zeros(a.dim());
        for k in 0..=quad_steps {
            let s = k as f64 * h;
            let w = match k {
                0 => 1.0,
                k if k == quad_steps => 1.0,
                k if k % 2 == 1 => 4.0,
                _ => 2.0,
            } * h
                / 3.0;
            let inner = self.free.heisenberg_evolve(a, t - s)?;
            let comm = self.p.commutator(&inner)?;
            let term = self.perturbed.heisenberg_evolve(&comm, s)?;
            integral = integral.add(&term.scale(w.into()))?;
        }
        let residual = perturbed
            .sub(&unperturbed)?
            .sub(&integral.scale(c64::new(0.0, 1.0)))?
            .norm()?;
        Ok(PerturbedEvolution {
            perturbed,
            unperturbed,
            perturbation_norm: self.p.norm()?,
            residual,
            quad_steps,
        })
    }
}

/// Perturbed Heisenberg evolution with its Dyson residual.
pub fn perturbed_evolve(
    config: &FockConfig,
    family: &PerturbationFamily,
    a: &DenseOperator,
    t: f64,
    quad_steps: usize,
) -> Result<PerturbedEvolution> {
    DysonCheck::new(config, family)?.evolve(a, t, quad_steps)
}

/// `||[tau_t(W(f)), W(g)] P||` on the probe subspace `P`.
pub fn commutator_oracle(model: &FockModel, f: &Field, g: &Field, t: f64) -> Result<f64> {
    let config = model.config();
    let wf = WeylFactors::new(config, f)?;
    let wg = WeylFactors::new(config, g)?;
    wf.check_leakage()?;
    wg.check_leakage()?;
    let probe = probe_basis(config);
    let evolve_f = |x: MatRef<'_, c64>| model.evolve_applied(|y| wf.apply(y), x, t);

    let mut gx = probe.clone();
    wg.apply(&mut gx)?;
    let first = evolve_f(gx.as_ref())?;
    let mut second = evolve_f(probe.as_ref())?;
    wg.apply(&mut second)?;
    spectral_norm((&first - &second).as_ref())
}

/// Per-time differences from [`volume_compare`].
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeComparison {
    pub differences: Vec<(f64, f64)>,
}

impl VolumeComparison {
    pub fn max_difference(&self) -> f64 {
        self.differences.iter().map(|d| d.1).fold(0.0, f64::max)
    }
}

/// `max_t ||tau_t^small(A) (x) 1 - tau_t^large(A (x) 1)||` on the large probe
/// subspace. Site `x` of the small chain is site `x` of the large one; the
/// coupling is given on the large chain and restricted to the small one.
pub fn volume_compare(
    small: &FockConfig,
    large: &FockConfig,
    coupling: Coupling<'_>,
    a: &DenseOperator,
    t_grid: &[f64],
) -> Result<VolumeComparison> {
    if small.sites() >= large.sites()
        || small.cutoff() != large.cutoff()
        || small.params() != large.params()
    {
        return Err(OracleError::config(
            "volumes",
            "the small chain must have fewer sites and the same cutoff and parameters",
        ));
    }
    if a.dim() != small.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: small.dim(),
            found: a.dim(),
        });
    }
    let restricted_family;
    let restricted_interaction;
    let small_coupling = match coupling {
        Coupling::Harmonic => Coupling::Harmonic,
        Coupling::Family(f) => {
            restricted_family = f.restrict((0..small.sites()).map(|x| small.lattice_site(x)))?;
            Coupling::Family(&restricted_family)
        }
        Coupling::Interaction(i) => {
            restricted_interaction = i.restrict(small.sites());
            Coupling::Interaction(&restricted_interaction)
        }
    };
    let small_model = FockModel::with_coupling(small.clone(), small_coupling)?;
    let large_model = FockModel::with_coupling(large.clone(), coupling)?;

    let mut omega = Mat::<c64>::zeros(a.dim(), 1);
    omega[(0, 0)] = c64::new(1.0, 0.0);
    let a_omega = a.mat() * &omega;
    let leakage = leaked_weight(small, a_omega.as_ref()).sqrt();
    if leakage > LEAKAGE_LIMIT {
        return Err(OracleError::Leakage {
            leakage,
            limit: LEAKAGE_LIMIT,
        });
    }

    let support: Vec<usize> = (0..small.sites()).collect();
    let probe = probe_basis(large);
    let mut differences = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let small_t = small_model.heisenberg_evolve(a, t)?;
        let mut lhs = probe.clone();
        apply_embedded(large, &support, small_t.mat(), &mut lhs)?;
        let rhs = large_model.evolve_applied(|y| apply_embedded(large, &support, a.mat(), y), probe.as_ref(), t)?;
        differences.push((t, spectral_norm((&lhs - &rhs).as_ref())?));
    }
    Ok(VolumeComparison { differences })
}

/// Squared weight of `v` on states with some occupation above the margin.
fn leaked_weight(config: &FockConfig, v: MatRef<'_, c64>) -> f64 {
    (0..config.dim())
        .filter(|&i| config.occupations(i).iter().any(|&n| n + LEAKAGE_MARGIN > config.cutoff()))
        .map(|i| v[(i, 0)].norm_sqr())
        .sum()
}
