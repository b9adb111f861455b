//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use lrlattice_core::harmonic::{
    apply_propagator_convolution, apply_propagator_torus, KernelTriple, PropagatorSpec, QuadratureSpec,
    TorusModes,
};
use lrlattice_core::lattice::convolution_constant;
use lrlattice_core::lieb_robinson::{
    cone_scan, estimate_velocity, pointwise_harmonic_bound, verify_kernel_bounds_grid, DecayCertificate,
};
use lrlattice_core::perturbations::{
    convergence_tail, convergence_tail_sets, first_moment, second_moment, PerturbationFamily, PerturbationGrowth,
    TailConstants, VolumeSequence,
};
use lrlattice_core::weyl::{commutator_norm, continuity_scan, state_eval, QuasiFreeState, WeylOperator};
use lrlattice_core::{
    symplectic_form, Complex64, DecayProfile, Field, HarmonicDynamics, HarmonicParameters, KernelOrder,
    LatticeGeometry, Site,
};
use lrlattice_oracle::{
    commutator_oracle, volume_compare, weyl_matrix, Boundary, Coupling, DysonCheck, FockConfig, FockModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn params(omega: f64, lambda: &[f64]) -> HarmonicParameters {
    HarmonicParameters::new(omega, lambda.to_vec()).expect("valid parameters")
}

fn kernel_identity() -> Outcome {
    let mut worst = 0.0f64;
    for d in [1usize, 2] {
        for omega in [0.0, 1.0] {
            let p = params(omega, &vec![1.0; d]);
            let triple = KernelTriple::compute(&p, 0.0, 12, &QuadratureSpec::default()).map_err(e)?;
            for m in KernelOrder::ALL {
                for (site, v) in triple.get(m).ball_samples() {
                    let expected = if m == KernelOrder::Zero && site.l1_norm() == 0 { 1.0 } else { 0.0 };
                    worst = worst.max((v - expected).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:e}"))
}

/// `p^2 + omega^2 q^2` on one site, acting on the label `q`-part `re` and `p`-part `im`.
fn single_site(omega: f64, t: f64, v: Complex64) -> Complex64 {
    let th = 2.0 * omega * t;
    c(th.cos() * v.re - omega * th.sin() * v.im, th.sin() / omega * v.re + th.cos() * v.im)
}

fn decoupled_closed_form() -> Outcome {
    let line = LatticeGeometry::infinite(1, 8).map_err(e)?;
    let entries = [(Site::from(-2), c(0.7, -0.3)), (Site::from(0), c(0.1, 0.9)), (Site::from(3), c(-1.2, 0.0))];
    let f = Field::from_entries(line, entries.clone()).map_err(e)?;
    let torus = LatticeGeometry::torus(1, 8).map_err(e)?;
    let ft = Field::from_entries(torus, entries).map_err(e)?;
    let mut worst = 0.0f64;
    for omega in [0.5, 1.0, 2.0] {
        let p = params(omega, &[0.0]);
        for t in [0.25, 1.0, 4.0] {
            let a = apply_propagator_convolution(&f, &p, t, &PropagatorSpec::default()).map_err(e)?;
            let b = apply_propagator_torus(&ft, &p, t).map_err(e)?;
            for x in -8..=8 {
                let s = Site::from(x);
                let expected = single_site(omega, t, f.get(&s));
                worst = worst.max((a.get(&s) - expected).norm()).max((b.get(&s) - expected).norm());
            }
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:e}"))
}

fn torus_infinite_agreement() -> Outcome {
    let p = params(1.0, &[1.0]);
    let line = LatticeGeometry::infinite(1, 32).map_err(e)?;
    let torus = LatticeGeometry::torus(1, 256).map_err(e)?;
    let entries = [(Site::from(0), c(1.0, 0.5)), (Site::from(3), c(-0.4, 0.2)), (Site::from(-5), c(0.0, -0.7))];
    let fl = Field::from_entries(line, entries.clone()).map_err(e)?;
    let ft = Field::from_entries(torus, entries).map_err(e)?;
    let mut worst = 0.0f64;
    for t in [0.0, 0.5, 1.0, 2.0, 3.0, 4.0] {
        let a = apply_propagator_convolution(&fl, &p, t, &PropagatorSpec::default()).map_err(e)?;
        let b = apply_propagator_torus(&ft, &p, t).map_err(e)?;
        for x in -32..=32 {
            let s = Site::from(x);
            worst = worst.max((a.get(&s) - b.get(&s)).norm());
        }
    }
    ensure(worst <= 1e-8, || format!("max difference {worst:e}"))?;
    Ok(format!("max difference {worst:e}"))
}

fn random_field(rng: &mut ChaCha8Rng, geometry: LatticeGeometry) -> Field {
    let n = rng.gen_range(1..6);
    let entries: Vec<(Site, Complex64)> = (0..n)
        .map(|_| {
            let x = rng.gen_range(-15..=16);
            (Site::from(x), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        })
        .collect();
    Field::from_entries(geometry, entries).expect("sites on the torus")
}

fn group_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let torus = LatticeGeometry::torus(1, 16).map_err(e)?;
    let (mut law, mut symp) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let p = params([0.5, 1.0, 2.0][rng.gen_range(0..3)], &[rng.gen_range(0.0..2.0)]);
        let f = random_field(&mut rng, torus);
        let g = random_field(&mut rng, torus);
        let (s, t) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let tf = apply_propagator_torus(&f, &p, t).map_err(e)?;
        let stf = apply_propagator_torus(&tf, &p, s).map_err(e)?;
        let direct = apply_propagator_torus(&f, &p, s + t).map_err(e)?;
        law = law.max(stf.sub(&direct).map_err(e)?.norm_l2());
        let tg = apply_propagator_torus(&g, &p, t).map_err(e)?;
        let drift = symplectic_form(&tf, &tg).map_err(e)? - symplectic_form(&f, &g).map_err(e)?;
        symp = symp.max(drift.abs());
    }
    let msg = format!("group law {law:e}, symplectic drift {symp:e}");
    ensure(law <= 1e-8 && symp <= 1e-8, || msg.clone())?;
    Ok(msg)
}

fn kernel_envelopes() -> Outcome {
    let t_grid: Vec<f64> = (0..9).map(|i| 0.25 * f64::from(i)).collect();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for d in [1usize, 2] {
        for (omega, lambda) in [(1.0, 1.0), (0.0, 1.0)] {
            let p = params(omega, &vec![lambda; d]);
            let reports =
                verify_kernel_bounds_grid(&p, &[0.5, 1.0, 2.0], &t_grid, 40, &QuadratureSpec::default()).map_err(e)?;
            for r in reports {
                worst = worst.max(r.max_ratio);
                checked += r.points_checked;
            }
        }
    }
    let msg = format!("max ratio {worst:.12} over {checked} points");
    ensure(worst <= 1.0 + 1e-9, || msg.clone())?;
    Ok(msg)
}

fn light_cone() -> Outcome {
    let p = params(0.0, &[1.0]);
    let t_grid: Vec<f64> = (1..=20).map(f64::from).collect();
    let scan = cone_scan(&p, 60, &t_grid, 0.1, &PropagatorSpec::default()).map_err(e)?;
    let v = estimate_velocity(&scan).map_err(e)?;
    let (excess, t, x) = scan.worst_excess(|r, t| pointwise_harmonic_bound(p.c(), r as f64, t));
    let msg = format!("velocity {:.4}, worst excess {excess:e} at t={t}, x={x}", v.velocity);
    ensure((1.8..=2.1).contains(&v.velocity) && excess <= 0.0, || msg.clone())?;
    Ok(msg)
}

fn bogoliubov_identity() -> Outcome {
    let mut worst = 0.0f64;
    let mut nodes = 0usize;
    for (omega, lambda) in [(1.0, vec![1.0]), (0.3, vec![1.0, 2.0]), (2.0, vec![0.5])] {
        let p = params(omega, &lambda);
        let d = lambda.len();
        // Kernel quadrature grids.
        let n: usize = if d == 1 { 512 } else { 96 };
        let node = |j: usize| -std::f64::consts::PI + (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / n as f64;
        for idx in 0..n.pow(d as u32) {
            let k: Vec<f64> = (0..d).map(|a| node((idx / n.pow(a as u32)) % n)).collect();
            let b = p.bogoliubov_multipliers(&k).map_err(e)?;
            worst = worst.max((b.bogoliubov_identity() - 1.0).abs());
            nodes += 1;
        }
        // Torus momenta.
        let modes = TorusModes::new(&p, LatticeGeometry::torus(d, 16).map_err(e)?).map_err(e)?;
        for (gp, gm) in modes.multipliers() {
            worst = worst.max((0.25 * (gp * gp - gm * gm) - 1.0).abs());
            nodes += 1;
        }
    }
    let msg = format!("max deviation {worst:e} over {nodes} nodes");
    ensure(worst <= 1e-12, || msg.clone())?;
    Ok(msg)
}

fn state_invariance() -> Outcome {
    let torus = LatticeGeometry::torus(1, 64).map_err(e)?;
    let p = params(1.0, &[1.0]);
    let state = QuasiFreeState::new(p, torus).map_err(e)?;
    let field = |v: &[(i64, f64, f64)]| Field::from_entries(torus, v.iter().map(|&(x, a, b)| (Site::from(x), c(a, b))));
    let f = field(&[(0, 0.8, -0.3), (1, 0.2, 0.5), (-4, -0.6, 0.0)]).map_err(e)?;
    let before = state_eval(&state, &WeylOperator::from_label(f.clone())).map_err(e)?;
    let mut worst = 0.0f64;
    for t in [0.1, 0.5, 1.0, 3.0, 10.0] {
        let after = state_eval(&state, &WeylOperator::from_label(state.evolve(&f, t).map_err(e)?)).map_err(e)?;
        worst = worst.max((after - before).norm());
    }
    let g1 = field(&[(-2, 0.3, 0.1)]).map_err(e)?;
    let g2 = field(&[(3, -0.2, 0.6)]).map_err(e)?;
    let scan = continuity_scan(&state, &g1, &f, &g2, 0.0, 1.0, &[16, 32, 64, 128, 256]).map_err(e)?;
    let ratios = scan.ratios();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let msg = format!("invariance {worst:e}, min halving ratio {min_ratio:.4}");
    ensure(worst <= 1e-8 && min_ratio >= 1.9, || msg.clone())?;
    Ok(msg)
}

fn fock_agreement() -> Outcome {
    let ring = LatticeGeometry::torus(1, 1).map_err(e)?;
    let p = params(1.0, &[1.0]);
    let dynamics = HarmonicDynamics::new(p.clone());
    let label = |a: Complex64, b: Complex64| Field::from_entries(ring, [(Site::from(0), a), (Site::from(1), b)]);
    let normalize = |f: Field, n: f64| f.scale(c(n / f.norm_l2(), 0.0));
    let pairs = [
        (label(c(0.3, 0.0), c(0.0, 0.0)).map_err(e)?, normalize(label(c(0.0, 0.1), c(0.2, 0.1)).map_err(e)?, 0.3)),
        (
            normalize(label(c(0.2, -0.3), c(0.1, 0.0)).map_err(e)?, 0.5),
            normalize(label(c(0.0, 0.4), c(-0.3, 0.2)).map_err(e)?, 0.5),
        ),
    ];
    let times = [0.5, 1.0];
    let cutoffs = [20usize, 40, 60];
    // errors[pair][time][cutoff]
    let mut errors = vec![vec![Vec::new(); times.len()]; pairs.len()];
    for &cutoff in &cutoffs {
        let model = FockModel::new(FockConfig::new(2, cutoff, p.clone()).map_err(e)?).map_err(e)?;
        for (i, (f, g)) in pairs.iter().enumerate() {
            for (j, &t) in times.iter().enumerate() {
                let exact = commutator_norm(f, g, &dynamics, t).map_err(e)?;
                let oracle = commutator_oracle(&model, f, g, t).map_err(e)?;
                errors[i][j].push((oracle - exact).abs() / exact);
            }
        }
    }
    let finest = errors.iter().flatten().map(|r| r[2]).fold(0.0, f64::max);
    let monotone = errors.iter().flatten().all(|r| r[0] > r[1] && r[1] > r[2]);
    let msg = format!("relative error at N=60 {finest:e}, monotone {monotone}");
    ensure(finest <= 1e-3 && monotone, || format!("{msg}: {errors:?}"))?;
    Ok(msg)
}

fn line8() -> LatticeGeometry {
    LatticeGeometry::infinite(1, 8).expect("valid window")
}

fn two_site_label() -> Field {
    Field::from_entries(line8(), [(Site::from(0), c(0.3, 0.0)), (Site::from(1), c(0.0, 0.2))]).expect("valid label")
}

fn cosine(sites: i64) -> Result<PerturbationFamily, String> {
    PerturbationFamily::uniform_cosine(line8(), (0..sites).map(Site::from).collect::<Vec<_>>(), c(0.2, 0.0)).map_err(e)
}

fn dyson() -> Outcome {
    let p = params(1.0, &[1.0]);
    let config = FockConfig::new(2, 12, p).map_err(e)?;
    let check = DysonCheck::new(&config, &cosine(2)?).map_err(e)?;
    let a = weyl_matrix(&config, &two_site_label()).map_err(e)?;
    let a_norm = a.norm().map_err(e)?;
    let mut tightest = f64::INFINITY;
    for t in [0.1, 0.25, 0.5, 1.0, 2.0] {
        let out = check.evolve(&a, t, 16).map_err(e)?;
        let diff = out.perturbed.sub(&out.unperturbed).map_err(e)?.norm().map_err(e)?;
        let bound = ((t * out.perturbation_norm).exp() - 1.0) * a_norm;
        ensure(diff <= bound, || format!("norm bound fails at t={t}: {diff:e} > {bound:e}"))?;
        tightest = tightest.min(bound - diff);
    }
    let residuals = [16usize, 32, 64, 128, 256]
        .iter()
        .map(|&n| check.evolve(&a, 0.5, n).map(|o| o.residual))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let msg = format!("min observed order {min_order:.3}, smallest bound margin {tightest:e}");
    ensure(min_order >= 2.0, || format!("{msg}: residuals {residuals:?}"))?;
    Ok(msg)
}

fn thermodynamic_limit() -> Outcome {
    let p = params(1.0, &[1.0]);
    let profile = DecayProfile::with_default_epsilon(1, 1.0).map_err(e)?;
    let cert = DecayCertificate::new(&p, &profile).map_err(e)?;
    let conv = convolution_constant(&profile, 64).value;

    let line = LatticeGeometry::infinite(1, 128).map_err(e)?;
    let seq = VolumeSequence::dyadic(1, 2, 7).map_err(e)?;
    let family = PerturbationFamily::uniform_cosine(line, seq.box_sites(5).map_err(e)?, c(0.2, 0.0)).map_err(e)?;
    let k = TailConstants {
        first_moment: first_moment(&family),
        cert: &cert,
        growth: PerturbationGrowth::OnSite {
            kappa: second_moment(&family).map_err(e)?,
            convolution: conv,
        },
        profile: &profile,
    };
    let f = Field::from_entries(line, [(Site::from(0), c(0.3, 0.1)), (Site::from(1), c(0.0, -0.2))]).map_err(e)?;
    let tails = (0..5)
        .map(|m| convergence_tail(&f, &seq, m + 1, m, 0.5, &k))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    let last = *tails.last().expect("five boxes");
    ensure(tails.windows(2).all(|w| w[1] < w[0]) && last < 1e-6, || format!("tails {tails:?}"))?;

    let p = params(1.0, &[1.0]);
    let small = FockConfig::new(2, 14, p.clone()).map_err(e)?.with_boundary(Boundary::Open);
    let large = FockConfig::new(3, 14, p).map_err(e)?.with_boundary(Boundary::Open);
    let chain = cosine(3)?;
    let label = two_site_label();
    let a = weyl_matrix(&small, &label).map_err(e)?;
    let t_grid = [0.125, 0.25, 0.375, 0.5];
    let cmp = volume_compare(&small, &large, Coupling::Family(&chain), &a, &t_grid).map_err(e)?;
    let kc = TailConstants {
        first_moment: first_moment(&chain),
        cert: &cert,
        growth: PerturbationGrowth::OnSite {
            kappa: second_moment(&chain).map_err(e)?,
            convolution: conv,
        },
        profile: &profile,
    };
    let small_sites: Vec<Site> = (0..2).map(Site::from).collect();
    let large_sites: Vec<Site> = (0..3).map(Site::from).collect();
    let mut worst_fraction = 0.0f64;
    for &(t, diff) in &cmp.differences {
        let bound = convergence_tail_sets(&label, &small_sites, &large_sites, t, &kc).map_err(e)?;
        ensure(diff <= bound, || format!("2-vs-3 site difference {diff:e} > {bound:e} at t={t}"))?;
        worst_fraction = worst_fraction.max(diff / bound);
    }
    Ok(format!("final tail {last:e}, largest difference/bound {worst_fraction:e}"))
}

fn cli_scenarios() -> Vec<Vec<&'static str>> {
    vec![
        vec!["kernel", "--d", "1", "--omega", "1", "--lambda", "1", "--t", "0,1", "--window", "32"],
        vec!["kernel", "--d", "2", "--omega", "0", "--lambda", "1,1", "--t", "0.5", "--window", "8"],
        vec!["cone", "--d", "1", "--omega", "0", "--lambda", "1"],
        vec!["bounds", "--d", "1", "--omega", "1", "--lambda", "1", "--window", "20", "--seed", "3"],
        vec!["state", "--d", "1", "--omega", "1", "--lambda", "1"],
        vec!["converge", "--d", "1", "--omega", "1", "--lambda", "1"],
        vec!["fock-verify", "--d", "1", "--omega", "1", "--lambda", "1", "--cutoffs", "20,40", "--t", "0.5", "--tolerance", "1e-2"],
    ]
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let scenarios = cli_scenarios();
    for (i, args) in scenarios.iter().enumerate() {
        for format in ["json", "csv"] {
            let mut outputs = Vec::new();
            for run in 0..2 {
                let path = dir.path().join(format!("{i}-{run}.{format}"));
                let status = Command::new(env!("CARGO_BIN_EXE_lrlattice"))
                    .args(args)
                    .args(["--format", format, "--output", path.to_str().expect("utf-8 path")])
                    .output()
                    .map_err(e)?;
                ensure(status.status.code() == Some(0), || {
                    format!("`{}` exited with {:?}: {}", args.join(" "), status.status.code(), String::from_utf8_lossy(&status.stderr))
                })?;
                outputs.push(std::fs::read(&path).map_err(e)?);
            }
            ensure(outputs[0] == outputs[1], || format!("`{} --format {format}` differs between runs", args.join(" ")))?;
        }
    }
    Ok(format!("{} scenarios x 2 formats byte-identical", scenarios.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "kernel identity at t=0", limit: Some(Duration::from_secs(10)), run: kernel_identity },
        Criterion { id: 2, name: "decoupled closed form", limit: None, run: decoupled_closed_form },
        Criterion { id: 3, name: "torus-infinite agreement", limit: Some(Duration::from_secs(60)), run: torus_infinite_agreement },
        Criterion { id: 4, name: "group law and symplectic invariance", limit: None, run: group_law },
        Criterion { id: 5, name: "kernel envelope bounds", limit: Some(Duration::from_secs(120)), run: kernel_envelopes },
        Criterion { id: 6, name: "light cone", limit: None, run: light_cone },
        Criterion { id: 7, name: "Bogoliubov identity", limit: None, run: bogoliubov_identity },
        Criterion { id: 8, name: "state invariance and continuity", limit: None, run: state_invariance },
        Criterion { id: 9, name: "Fock oracle agreement", limit: Some(Duration::from_secs(300)), run: fock_agreement },
        Criterion { id: 10, name: "Dyson verification", limit: None, run: dyson },
        Criterion { id: 11, name: "thermodynamic-limit convergence", limit: None, run: thermodynamic_limit },
        Criterion { id: 12, name: "CLI determinism", limit: None, run: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(msg), Some(limit)) if elapsed > limit => Err(format!("{msg}; took {elapsed:.1?} > {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {} ({msg}; {elapsed:.2?})", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {} ({msg}; {elapsed:.2?})", c.id, c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
