//! One runner per command. Each returns a [`Report`]; bound violations are
//! recorded in the report, errors abort the run.

use std::path::Path;

use lrlattice_core::harmonic::{evolve_convolution, KernelTriple, PropagatorSpec};
use lrlattice_core::lattice::convolution_constant;
use lrlattice_core::lieb_robinson::{
    cone_slice, estimate_velocity, pointwise_harmonic_bound, velocity_bound, verify_kernel_bounds_grid,
    ConeScan, DecayCertificate, KERNEL_BOUND_SLACK,
};
use lrlattice_core::perturbations::{
    convergence_tail, convergence_tail_sets, first_moment, pair_moment, second_moment, Atom, AtomicWeylMeasure,
    PerturbationFamily, PerturbationGrowth, TailConstants, VolumeSequence,
};
use lrlattice_core::weyl::{commutator_norm, continuity_scan, state_eval, QuasiFreeState, WeylOperator};
use lrlattice_core::{
    symplectic_form, Complex64, DecayProfile, Field, HarmonicDynamics, KernelOrder, LatticeGeometry, Site,
};
use lrlattice_oracle::{
    commutator_oracle, volume_compare, weyl_matrix, Boundary, Coupling, CutoffPoint, FockConfig, FockModel,
    OracleReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::output::{Cell, Report, Table};
use crate::scenario::{build_label, Command, Scenario};

pub type RunResult = Result<Report, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn run(scenario: &Scenario) -> RunResult {
    match scenario.command {
        Command::Kernel => kernel(scenario),
        Command::Cone => cone(scenario),
        Command::Bounds => bounds(scenario),
        Command::State => state(scenario),
        Command::Converge => converge(scenario),
        Command::FockVerify => fock_verify(scenario),
    }
}

fn site_columns(d: usize) -> Vec<String> {
    if d == 1 {
        vec!["x".into()]
    } else {
        (1..=d).map(|i| format!("x{i}")).collect()
    }
}

fn columns(head: &[&str], d: usize, tail: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = head.iter().map(|s| (*s).to_owned()).collect();
    out.extend(site_columns(d));
    out.extend(tail.iter().map(|s| (*s).to_owned()));
    out
}

fn set_params(report: &mut Report, s: &Scenario) {
    report.set("d", s.dim());
    report.set("omega", s.params.omega());
    for (i, l) in s.params.lambda().iter().enumerate() {
        report.set(&format!("lambda{}", i + 1), *l);
    }
}

fn kernel(s: &Scenario) -> RunResult {
    let d = s.dim();
    let triples = s
        .t
        .par_iter()
        .map(|&t| KernelTriple::compute(&s.params, t, s.window, &s.quad))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let mut report = Report::new(Command::Kernel);
    set_params(&mut report, s);
    report.set("window", s.window);
    report.set("x_max", s.x_max);
    let c = s.params.c();
    let mut table = Table::with_columns("kernel", columns(&["t", "m"], d, &["value", "error_bar"]));
    for triple in &triples {
        for m in KernelOrder::ALL {
            let k = triple.get(m);
            let bar = k.error_bar(c);
            for (site, value) in k.ball_samples() {
                if site.l1_norm() > u64::from(s.x_max) {
                    continue;
                }
                let mut row = vec![Cell::F(k.t), Cell::I(i64::from(m.index()))];
                row.extend(site.coords().iter().map(|&x| Cell::I(x)));
                row.push(value.into());
                row.push(bar.into());
                table.push(row);
            }
        }
    }
    report.tables.push(table);
    Ok(report)
}

fn cone(s: &Scenario) -> RunResult {
    let spec = PropagatorSpec {
        quad: s.quad,
        ..PropagatorSpec::default()
    };
    let slices = s
        .t
        .par_iter()
        .map(|&t| cone_slice(&s.params, s.x_max, t, &spec))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let scan = ConeScan::from_slices(s.params.clone(), s.x_max, s.t.clone(), slices, s.threshold).map_err(err)?;
    let c = s.params.c();
    let mut report = Report::new(Command::Cone);
    set_params(&mut report, s);
    report.set("x_max", s.x_max);
    report.set("threshold", s.threshold);
    match estimate_velocity(&scan) {
        Ok(v) => {
            report.set("velocity", v.velocity);
            report.set("intercept", v.intercept);
            report.set("fit_residual", v.fit_residual);
            report.set("slices_used", v.slices_used);
            for &mu in &s.mu {
                let bound = velocity_bound(c, mu);
                if v.velocity >= bound {
                    report.violation(format!("velocity {} >= bound {bound} at mu = {mu}", v.velocity));
                }
            }
        }
        Err(e) => report.violation(format!("no velocity fit: {e}")),
    }
    let (excess, t, x) = scan.worst_excess(|r, t| pointwise_harmonic_bound(c, r as f64, t));
    report.set("worst_excess", excess);
    report.set("worst_t", t);
    report.set("worst_x", x);
    if excess > 0.0 {
        report.violation(format!("scan exceeds the harmonic bound by {excess} at t = {t}, x = {x}"));
    }
    let mut bounds = Table::new("velocity_bounds", &["mu", "velocity_bound"]);
    for &mu in &s.mu {
        bounds.push(vec![mu.into(), velocity_bound(c, mu).into()]);
    }
    let mut cells = Table::new("scan", &["t", "x", "value", "resolution"]);
    for ((&t, row), &res) in scan.t_grid.iter().zip(&scan.values).zip(&scan.resolution) {
        for (x, &v) in scan.sites().zip(row) {
            cells.push(vec![t.into(), x.into(), v.into(), res.into()]);
        }
    }
    report.tables.push(bounds);
    report.tables.push(cells);
    Ok(report)
}

fn random_label(rng: &mut ChaCha8Rng, geometry: LatticeGeometry, start: i64) -> Field {
    let d = geometry.dim();
    let entries: Vec<(Site, Complex64)> = (start..start + 8)
        .map(|x| {
            let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (Site::on_axis(d, 0, x), v)
        })
        .collect();
    Field::from_entries(geometry, entries).expect("sites inside the window")
}

fn bounds(s: &Scenario) -> RunResult {
    let slack = s.tolerance.unwrap_or(KERNEL_BOUND_SLACK);
    let reports = verify_kernel_bounds_grid(&s.params, &s.mu, &s.t, s.window, &s.quad).map_err(err)?;
    let mut report = Report::new(Command::Bounds);
    set_params(&mut report, s);
    report.set("window", s.window);
    report.set("slack", slack);
    report.set("seed", s.seed as i64);
    let d = s.dim();
    let mut envelopes = Table::with_columns(
        "envelopes",
        columns(
            &["mu", "max_ratio", "points_checked", "unresolved", "worst_m", "worst_t"],
            d,
            &["worst_value", "worst_envelope", "worst_error_bar", "worst_raw_ratio"],
        ),
    );
    for r in &reports {
        if r.max_ratio > 1.0 + slack {
            report.violation(format!(
                "envelope ratio {} at mu = {}, m = {}, t = {}, x = {:?}",
                r.max_ratio,
                r.mu,
                r.worst.m.index(),
                r.worst.t,
                r.worst.site.coords()
            ));
        }
        let w = &r.worst;
        let mut row = vec![
            r.mu.into(),
            r.max_ratio.into(),
            r.points_checked.into(),
            r.unresolved.into(),
            Cell::I(i64::from(w.m.index())),
            w.t.into(),
        ];
        row.extend(w.site.coords().iter().map(|&x| Cell::I(x)));
        row.extend([w.value.into(), w.envelope.into(), w.error_bar.into(), w.raw_ratio.into()]);
        envelopes.push(row);
    }
    report.tables.push(envelopes);

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let geometry = LatticeGeometry::infinite(d, 64).map_err(err)?;
    let dynamics = HarmonicDynamics::new(s.params.clone());
    let mut spot = Table::new("spot_checks", &["a", "t", "sigma", "resolution", "bound", "holds"]);
    for &a in &s.a {
        let profile = DecayProfile::new(d, s.epsilon, a).map_err(err)?;
        let cert = DecayCertificate::new(&s.params, &profile).map_err(err)?;
        for _ in 0..s.samples {
            let (fs, gs) = (rng.gen_range(-20..0), rng.gen_range(0..20));
            let f = random_label(&mut rng, geometry, fs);
            let g = random_label(&mut rng, geometry, gs);
            let t = rng.gen_range(-1.5..1.5);
            let (tf, window) = evolve_convolution(&f, &s.params, t, dynamics.spec()).map_err(err)?;
            let sigma = symplectic_form(&tf, &g).map_err(err)?;
            let resolution = window.pointwise_error * g.norm_l1();
            let rhs = cert.bound(&profile, &f, &g, t).map_err(err)?;
            let holds = sigma.abs() - resolution <= rhs;
            if !holds {
                report.violation(format!("|sigma| = {} exceeds {rhs} at a = {a}, t = {t}", sigma.abs()));
            }
            spot.push(vec![a.into(), t.into(), sigma.into(), resolution.into(), rhs.into(), holds.into()]);
        }
    }
    report.tables.push(spot);
    Ok(report)
}

fn state(s: &Scenario) -> RunResult {
    let tol = s.tolerance.unwrap_or(1e-8);
    let state = QuasiFreeState::new(s.params.clone(), s.geometry).map_err(err)?;
    let f = s.label(&s.f).map_err(err)?;
    let g1 = s.label(&s.g).map_err(err)?;
    let g2 = s.label(&s.g2).map_err(err)?;
    let before = state_eval(&state, &WeylOperator::from_label(f.clone())).map_err(err)?;
    let mut report = Report::new(Command::State);
    set_params(&mut report, s);
    report.set("torus_half_side", s.geometry.half_side().unwrap_or(0));
    report.set("tolerance", tol);
    let mut inv = Table::new("invariance", &["t", "re", "im", "difference"]);
    for &t in &s.t {
        let tf = state.evolve(&f, t).map_err(err)?;
        let after = state_eval(&state, &WeylOperator::from_label(tf)).map_err(err)?;
        let diff = (after - before).norm();
        if diff > tol {
            report.violation(format!("state changes by {diff} at t = {t}"));
        }
        inv.push(vec![t.into(), after.re.into(), after.im.into(), diff.into()]);
    }
    let scan = continuity_scan(&state, &g1, &f, &g2, 0.0, 1.0, &s.steps).map_err(err)?;
    let ratios = scan.ratios();
    let mut cont = Table::new("continuity", &["h", "modulus", "ratio"]);
    for (i, &(h, m)) in scan.modulus.iter().enumerate() {
        let ratio = if i == 0 { f64::NAN } else { ratios[i - 1] };
        cont.push(vec![h.into(), m.into(), ratio.into()]);
    }
    if s.params.omega() > 0.0 {
        if let Some((i, r)) = ratios.iter().enumerate().find(|(_, r)| !(**r >= 1.9)) {
            report.violation(format!("continuity ratio {r} < 1.9 at refinement {}", i + 1));
        }
    }
    report.tables.push(inv);
    report.tables.push(cont);
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomFile {
    z: Vec<[f64; 2]>,
    weight: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFile {
    support: Vec<Vec<i64>>,
    atoms: Vec<AtomFile>,
    /// The atom list already contains both `z` and `-z`.
    #[serde(default)]
    explicit: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    volume: Vec<Vec<i64>>,
    measures: Vec<MeasureFile>,
}

/// Reads a perturbation family from JSON.
pub fn load_family(path: &Path, geometry: LatticeGeometry) -> Result<PerturbationFamily, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read `{}`: {e}", path.display()))?;
    let file: FamilyFile =
        serde_json::from_str(&text).map_err(|e| format!("perturbation file `{}`: {e}", path.display()))?;
    let mut family = PerturbationFamily::new(geometry, file.volume.into_iter().map(Site::new)).map_err(err)?;
    for m in file.measures {
        let support: Vec<Site> = m.support.into_iter().map(Site::new).collect();
        let atoms: Vec<Atom> = m
            .atoms
            .into_iter()
            .map(|a| Atom {
                z: a.z.iter().map(|z| Complex64::new(z[0], z[1])).collect(),
                weight: a.weight,
            })
            .collect();
        let measure = if m.explicit {
            AtomicWeylMeasure::from_explicit(support, atoms)
        } else {
            AtomicWeylMeasure::new(support, atoms)
        }
        .map_err(err)?;
        family.push(measure).map_err(err)?;
    }
    Ok(family)
}

fn growth(family: &PerturbationFamily, profile: &DecayProfile, window: u32) -> Result<PerturbationGrowth, String> {
    let convolution = convolution_constant(profile, 64).value;
    if family.measures().iter().all(|m| m.support().len() <= 1) {
        Ok(PerturbationGrowth::OnSite {
            kappa: second_moment(family).map_err(err)?,
            convolution,
        })
    } else {
        Ok(PerturbationGrowth::MultiSite {
            kappa_a: pair_moment(family, profile, window).map_err(err)?.kappa_a,
            convolution,
        })
    }
}

fn converge(s: &Scenario) -> RunResult {
    let d = s.dim();
    let (lo, hi) = s.box_exponents;
    let seq = VolumeSequence::dyadic(d, lo, hi + 1).map_err(err)?;
    let family = match &s.perturbation {
        Some(path) => load_family(path, s.geometry)?,
        None => {
            let volume = seq.box_sites(seq.len() - 1).map_err(err)?;
            let z = Complex64::new(s.cosine_z[0], s.cosine_z[1]);
            PerturbationFamily::uniform_cosine(s.geometry, volume, z).map_err(err)?
        }
    };
    let f = s.label(&s.f).map_err(err)?;
    let mut report = Report::new(Command::Converge);
    set_params(&mut report, s);
    report.set("epsilon", s.epsilon);
    report.set("first_moment", first_moment(&family));
    if let Some(tol) = s.tolerance {
        report.set("tolerance", tol);
    }
    let mut table = Table::new("tails", &["a", "t", "n", "half_side_small", "half_side_large", "tail"]);
    for &a in &s.a {
        let profile = DecayProfile::new(d, s.epsilon, a).map_err(err)?;
        let cert = DecayCertificate::new(&s.params, &profile).map_err(err)?;
        let k = TailConstants {
            first_moment: first_moment(&family),
            cert: &cert,
            growth: growth(&family, &profile, s.window)?,
            profile: &profile,
        };
        for &t in &s.t {
            let tails = (0..seq.len() - 1)
                .into_par_iter()
                .map(|m| convergence_tail(&f, &seq, m + 1, m, t, &k))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            for (m, &tail) in tails.iter().enumerate() {
                let n = i64::from(lo) + m as i64;
                let small = seq.half_side(m).map_err(err)?;
                let large = seq.half_side(m + 1).map_err(err)?;
                table.push(vec![a.into(), t.into(), n.into(), small.into(), large.into(), tail.into()]);
            }
            if let Some(w) = tails.windows(2).position(|w| w[1] > w[0]) {
                report.violation(format!("tail increases after n = {} at a = {a}, t = {t}", i64::from(lo) + w as i64));
            }
            if let (Some(tol), Some(&last)) = (s.tolerance, tails.last()) {
                if last >= tol {
                    report.violation(format!("final tail {last} >= {tol} at a = {a}, t = {t}"));
                }
            }
        }
    }
    report.tables.push(table);
    Ok(report)
}

fn fock_verify(s: &Scenario) -> RunResult {
    let tol = s.tolerance.unwrap_or(1e-3);
    let f = s.label(&s.f).map_err(err)?;
    let g = s.label(&s.g).map_err(err)?;
    let dynamics = HarmonicDynamics::new(s.params.clone());
    let exact = s
        .t
        .iter()
        .map(|&t| commutator_norm(&f, &g, &dynamics, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    // values[cutoff][time]
    let mut configs = Vec::new();
    let mut values = Vec::new();
    for &cutoff in &s.cutoffs {
        let config = FockConfig::new(2, cutoff, s.params.clone()).map_err(err)?;
        let model = FockModel::new(config.clone()).map_err(err)?;
        let row = s
            .t
            .iter()
            .map(|&t| commutator_oracle(&model, &f, &g, t))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        values.push(row);
        configs.push(config);
    }
    let mut report = Report::new(Command::FockVerify);
    set_params(&mut report, s);
    report.set("sites", 2usize);
    report.set("tolerance", tol);
    let mut table = Table::new("commutator", &["t", "cutoff", "oracle", "exact", "relative_error"]);
    let mut studies = Table::new("reports", &["t", "quantity", "value", "error_estimate", "cutoff"]);
    for (j, &t) in s.t.iter().enumerate() {
        let rel: Vec<f64> = values.iter().map(|row| (row[j] - exact[j]).abs() / exact[j]).collect();
        for (i, &cutoff) in s.cutoffs.iter().enumerate() {
            table.push(vec![t.into(), cutoff.into(), values[i][j].into(), exact[j].into(), rel[i].into()]);
        }
        let study = s
            .cutoffs
            .iter()
            .zip(&values)
            .map(|(&cutoff, row)| CutoffPoint { cutoff, value: row[j] })
            .collect();
        let r = OracleReport::from_study(configs.last().expect("cutoffs non-empty"), "commutator_norm", study);
        studies.push(vec![t.into(), r.quantity.as_str().into(), r.value.into(), r.error_estimate.into(), r.config.cutoff.into()]);
        let last = *rel.last().expect("cutoffs non-empty");
        if !(last <= tol) {
            report.violation(format!("relative error {last} > {tol} at t = {t}"));
        }
        if rel.windows(2).any(|w| !(w[1] < w[0])) {
            report.violation(format!("error does not decrease with the cutoff at t = {t}: {rel:?}"));
        }
    }
    report.tables.push(table);
    report.tables.push(studies);
    if s.volume_check {
        let table = volume_table(s, &mut report)?;
        report.tables.push(table);
    }
    Ok(report)
}

/// Open 2- vs 3-site chains under the cosine perturbation, against the tail bound.
fn volume_table(s: &Scenario, report: &mut Report) -> Result<Table, String> {
    let cutoff = 14;
    let line = LatticeGeometry::infinite(1, 8).map_err(err)?;
    let f = build_label(line, &s.f).map_err(err)?;
    let small = FockConfig::new(2, cutoff, s.params.clone()).map_err(err)?.with_boundary(Boundary::Open);
    let large = FockConfig::new(3, cutoff, s.params.clone()).map_err(err)?.with_boundary(Boundary::Open);
    let z = Complex64::new(s.cosine_z[0], s.cosine_z[1]);
    let large_sites: Vec<Site> = (0..3).map(Site::from).collect();
    let small_sites: Vec<Site> = (0..2).map(Site::from).collect();
    let family = PerturbationFamily::uniform_cosine(line, large_sites.clone(), z).map_err(err)?;
    let a = weyl_matrix(&small, &f).map_err(err)?;
    let t_grid: Vec<f64> = s.t.iter().copied().filter(|t| t.abs() <= 0.5).collect();
    let cmp = volume_compare(&small, &large, Coupling::Family(&family), &a, &t_grid).map_err(err)?;
    let profile = DecayProfile::new(1, s.epsilon, s.a[0]).map_err(err)?;
    let cert = DecayCertificate::new(&s.params, &profile).map_err(err)?;
    let k = TailConstants {
        first_moment: first_moment(&family),
        cert: &cert,
        growth: growth(&family, &profile, 8)?,
        profile: &profile,
    };
    let mut table = Table::new("volume", &["t", "difference", "tail_bound"]);
    for &(t, diff) in &cmp.differences {
        let bound = convergence_tail_sets(&f, &small_sites, &large_sites, t, &k).map_err(err)?;
        if diff > bound {
            report.violation(format!("volume difference {diff} exceeds {bound} at t = {t}"));
        }
        table.push(vec![t.into(), diff.into(), bound.into()]);
    }
    Ok(table)
}
