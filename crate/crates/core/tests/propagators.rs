use lrlattice_core::harmonic::{
    apply_propagator_convolution, apply_propagator_torus, evolve_convolution, HarmonicParameters,
    PropagatorSpec,
};
use lrlattice_core::{symplectic_form, Complex64, Field, LatticeGeometry, Site};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `q, p` of `p^2 + omega^2 q^2` after time `t`, as the label rotation.
fn single_site(omega: f64, t: f64, v: Complex64) -> Complex64 {
    let th = 2.0 * omega * t;
    c(
        th.cos() * v.re - omega * th.sin() * v.im,
        th.sin() / omega * v.re + th.cos() * v.im,
    )
}

#[test]
fn decoupled_sites_rotate_in_closed_form() {
    let line = LatticeGeometry::infinite(1, 8).unwrap();
    let f = Field::from_entries(
        line,
        [(Site::from(-2), c(0.7, -0.3)), (Site::from(0), c(0.1, 0.9)), (Site::from(3), c(-1.2, 0.0))],
    )
    .unwrap();
    for omega in [0.5, 1.0, 2.0] {
        let params = HarmonicParameters::new(omega, [0.0]).unwrap();
        for t in [0.25, 1.0, 4.0] {
            for g in [
                apply_propagator_convolution(&f, &params, t, &PropagatorSpec::default()).unwrap(),
                {
                    let torus = LatticeGeometry::torus(1, 8).unwrap();
                    let ft = Field::from_entries(torus, f.iter().map(|(s, v)| (s.clone(), *v))).unwrap();
                    apply_propagator_torus(&ft, &params, t).unwrap()
                },
            ] {
                for (site, v) in g.iter() {
                    let expected = single_site(omega, t, f.get(site));
                    assert!((v - expected).norm() <= 1e-10, "omega={omega} t={t} {site:?}");
                }
            }
        }
    }
}

#[test]
fn unit_frequency_multiplies_by_phase() {
    let params = HarmonicParameters::new(1.0, [0.0, 0.0]).unwrap();
    let plane = LatticeGeometry::infinite(2, 4).unwrap();
    let f = Field::from_entries(plane, [(Site::from([1, -1]), c(0.3, 0.2))]).unwrap();
    let t = 0.9;
    let g = apply_propagator_convolution(&f, &params, t, &PropagatorSpec::default()).unwrap();
    let phase = c((2.0 * t).cos(), (2.0 * t).sin());
    assert!(g.max_abs_diff(&f.scale(phase)).unwrap() < 1e-13);
}

#[test]
fn torus_and_convolution_agree_on_large_torus() {
    let params = HarmonicParameters::new(1.0, [1.0]).unwrap();
    let line = LatticeGeometry::infinite(1, 32).unwrap();
    let torus = LatticeGeometry::torus(1, 256).unwrap();
    let entries = [(Site::from(0), c(1.0, 0.5)), (Site::from(3), c(-0.4, 0.2)), (Site::from(-5), c(0.0, -0.7))];
    let f_line = Field::from_entries(line, entries.clone()).unwrap();
    let f_torus = Field::from_entries(torus, entries).unwrap();
    for t in [0.5, 1.0, 2.0, 3.0, 4.0] {
        let a = apply_propagator_convolution(&f_line, &params, t, &PropagatorSpec::default()).unwrap();
        let b = apply_propagator_torus(&f_torus, &params, t).unwrap();
        for x in -32..=32 {
            let s = Site::from(x);
            assert!((a.get(&s) - b.get(&s)).norm() <= 1e-8, "t={t} x={x}");
        }
    }
}

#[test]
fn time_zero_is_identity() {
    let params = HarmonicParameters::new(0.0, [1.0]).unwrap();
    let line = LatticeGeometry::infinite(1, 8).unwrap();
    let f = Field::from_entries(line, [(Site::from(2), c(0.4, -1.0))]).unwrap();
    let (g, cert) = evolve_convolution(&f, &params, 0.0, &PropagatorSpec::default()).unwrap();
    assert!(g.max_abs_diff(&f).unwrap() < 1e-14);
    assert!(cert.bound <= 1e-12);
    let torus = LatticeGeometry::torus(1, 8).unwrap();
    let ft = Field::from_entries(torus, [(Site::from(2), c(0.0, -1.0))]).unwrap();
    assert!(apply_propagator_torus(&ft, &params, 0.0).unwrap().max_abs_diff(&ft).unwrap() < 1e-14);
}

#[test]
fn convolution_is_real_linear_not_complex_linear() {
    let params = HarmonicParameters::new(0.6, [1.0]).unwrap();
    let line = LatticeGeometry::infinite(1, 8).unwrap();
    let spec = PropagatorSpec::default();
    let f = Field::from_entries(line, [(Site::from(0), c(1.0, 0.0))]).unwrap();
    let g = Field::from_entries(line, [(Site::from(1), c(0.0, 1.0))]).unwrap();
    let t = 0.8;
    let tf = apply_propagator_convolution(&f, &params, t, &spec).unwrap();
    let tg = apply_propagator_convolution(&g, &params, t, &spec).unwrap();
    let sum = apply_propagator_convolution(&f.add(&g).unwrap(), &params, t, &spec).unwrap();
    assert!(sum.max_abs_diff(&tf.add(&tg).unwrap()).unwrap() < 1e-13);
    let scaled = apply_propagator_convolution(&f.scale(c(-2.5, 0.0)), &params, t, &spec).unwrap();
    assert!(scaled.max_abs_diff(&tf.scale(c(-2.5, 0.0))).unwrap() < 1e-13);
    let rotated = apply_propagator_convolution(&f.scale(c(0.0, 1.0)), &params, t, &spec).unwrap();
    assert!(rotated.max_abs_diff(&tf.scale(c(0.0, 1.0))).unwrap() > 1e-3);
}

fn torus_field(geometry: LatticeGeometry, values: Vec<(i64, f64, f64)>) -> Field {
    Field::from_entries(geometry, values.into_iter().map(|(x, a, b)| (Site::from(x), c(a, b)))).unwrap()
}

fn label() -> impl Strategy<Value = Vec<(i64, f64, f64)>> {
    prop::collection::vec((-15i64..=16, -1.0..1.0f64, -1.0..1.0f64), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn group_law_and_symplectic_invariance(
        f in label(),
        g in label(),
        s in -2.0..2.0f64,
        t in -2.0..2.0f64,
        omega in prop::sample::select(vec![0.5, 1.0, 2.0]),
        lambda in 0.0..2.0f64,
    ) {
        let torus = LatticeGeometry::torus(1, 16).unwrap();
        let params = HarmonicParameters::new(omega, [lambda]).unwrap();
        let f = torus_field(torus, f);
        let g = torus_field(torus, g);
        let tf = apply_propagator_torus(&f, &params, t).unwrap();
        let stf = apply_propagator_torus(&tf, &params, s).unwrap();
        let direct = apply_propagator_torus(&f, &params, s + t).unwrap();
        prop_assert!(stf.sub(&direct).unwrap().norm_l2() <= 1e-8);
        let tg = apply_propagator_torus(&g, &params, t).unwrap();
        let before = symplectic_form(&f, &g).unwrap();
        let after = symplectic_form(&tf, &tg).unwrap();
        prop_assert!((before - after).abs() <= 1e-8);
    }

    #[test]
    fn massless_group_law_on_domain(f in label(), s in -1.5..1.5f64, t in -1.5..1.5f64) {
        let torus = LatticeGeometry::torus(1, 16).unwrap();
        let params = HarmonicParameters::new(0.0, [1.0]).unwrap();
        let f = torus_field(torus, f);
        // Remove the mean of the position part.
        let mean = f.iter().map(|(_, v)| v.re).sum::<f64>() / 32.0;
        let values: Vec<Complex64> = f.to_torus_values().unwrap().iter().map(|v| v - mean).collect();
        let f = Field::from_torus_values(torus, &values).unwrap();
        let stf = apply_propagator_torus(&apply_propagator_torus(&f, &params, t).unwrap(), &params, s).unwrap();
        let direct = apply_propagator_torus(&f, &params, s + t).unwrap();
        prop_assert!(stf.sub(&direct).unwrap().norm_l2() <= 1e-8);
    }

    #[test]
    fn convolution_group_law(f in prop::collection::vec((-3i64..=3, -1.0..1.0f64, -1.0..1.0f64), 1..4),
                             s in 0.0..0.75f64, t in 0.0..0.75f64) {
        let line = LatticeGeometry::infinite(1, 8).unwrap();
        let params = HarmonicParameters::new(1.0, [1.0]).unwrap();
        let spec = PropagatorSpec::default();
        let f = Field::from_entries(line, f.into_iter().map(|(x, a, b)| (Site::from(x), c(a, b)))).unwrap();
        let tf = apply_propagator_convolution(&f, &params, t, &spec).unwrap();
        let stf = apply_propagator_convolution(&tf, &params, s, &spec).unwrap();
        let direct = apply_propagator_convolution(&f, &params, s + t, &spec).unwrap();
        prop_assert!(stf.sub(&direct).unwrap().norm_l2() <= 1e-8);
    }
}
