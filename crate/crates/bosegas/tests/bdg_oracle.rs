//! Convention-fixing regression: every sign, adjoint, and ordering choice of
//! the Bogoliubov pair evolution is checked against exact diagonalization on
//! the truncated Fock space. These tests must never be weakened; they are
//! what pins the conjugation conventions in the propagator.

use bosegas::bogoliubov::{
    propagate, single_mode_closed_form, ConstantGenerator, GeneratorSource, PropagationOptions,
    QuadraticGenerator,
};
use bosegas::fock::{
    evolve_time_dependent, second_quantize, verify_bogoliubov_conjugation, ExactEvolution,
    FieldExponential, FockBasis,
};
use bosegas::linalg::{self, CMat, CVec};
use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The matched two-mode instance used across the oracle tests.
fn matched_instance() -> (CMat<f64>, CMat<f64>) {
    let h1 = ndarray::array![
        [c(0.9, 0.0), c(0.15, 0.1)],
        [c(0.15, -0.1), c(1.2, 0.0)]
    ];
    // Pairing weak enough that the n_max = 14 truncation has converged to
    // well below the 1e-6 tolerances on the probed subspace.
    let h2 = ndarray::array![
        [c(0.04, 0.0), c(0.018, 0.008)],
        [c(0.018, 0.008), c(0.03, 0.0)]
    ];
    (h1, h2)
}

fn constant_source(h1: &CMat<f64>, h2: &CMat<f64>) -> ConstantGenerator<f64> {
    let mut g = QuadraticGenerator::zero(h1.nrows(), 1.0, 0.0);
    g.h1 = h1.clone();
    g.h2 = h2.clone();
    ConstantGenerator { gen: g }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVec<f64> {
    Array1::from_shape_fn(n, |_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

#[test]
fn conjugation_identity_on_matched_instance() {
    let (h1, h2) = matched_instance();
    let basis = FockBasis::<f64>::new(2, 14, 20_000).unwrap();
    let gen = second_quantize(&basis, &h1, &h2, c(0.0, 0.0)).unwrap();
    let exact = ExactEvolution::new(&gen).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0607);

    for &t in &[0.1, 0.3, 0.5, -0.5] {
        let fock_u = exact.unitary(t);
        let mut src = constant_source(&h1, &h2);
        let (pair, _) = propagate(
            &mut src,
            2,
            1.0,
            0.0,
            t,
            1e-4 * t.signum(),
            PropagationOptions {
                defect_limit: 1e-5,
                record_stride: 100_000,
            },
        )
        .unwrap();
        for _ in 0..10 {
            let f = random_vector(&mut rng, 2);
            let g = random_vector(&mut rng, 2);
            let (tf, tg) = pair.map_pair(&f, &g);
            let check =
                verify_bogoliubov_conjugation(&basis, &fock_u, &f, &g, &tf, &tg, 1e-8, 2).unwrap();
            assert!(
                check.defect <= 1e-6,
                "conjugation defect {} at t={t}",
                check.defect
            );
            assert!(check.leakage <= 1e-8);
        }
        // t = s: defect identically zero
        let id_u = exact.unitary(0.0);
        let f = random_vector(&mut rng, 2);
        let g = random_vector(&mut rng, 2);
        let check = verify_bogoliubov_conjugation(&basis, &id_u, &f, &g, &f, &g, 1e-8, 2).unwrap();
        assert!(check.defect < 1e-12);
    }
}

#[test]
fn free_generator_conjugation_is_exact() {
    // H1 diagonal (a pure one-particle rotation), H2 = 0: both sides are the
    // same multiplier action and V stays zero.
    let h1 = ndarray::array![[c(0.7, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.1, 0.0)]];
    let h2 = ndarray::array![[c(0.0, 0.0); 2], [c(0.0, 0.0); 2]];
    let basis = FockBasis::<f64>::new(2, 10, 20_000).unwrap();
    let gen = second_quantize(&basis, &h1, &h2, c(0.0, 0.0)).unwrap();
    let exact = ExactEvolution::new(&gen).unwrap();
    let t = 0.4;
    let fock_u = exact.unitary(t);
    let mut src = constant_source(&h1, &h2);
    let (pair, _) = propagate(&mut src, 2, 1.0, 0.0, t, 2e-5, PropagationOptions::default()).unwrap();
    assert!(pair.vacuum_number() < 1e-20);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_vector(&mut rng, 2);
    let g = random_vector(&mut rng, 2);
    let (tf, tg) = pair.map_pair(&f, &g);
    let check = verify_bogoliubov_conjugation(&basis, &fock_u, &f, &g, &tf, &tg, 1e-8, 4).unwrap();
    assert!(check.defect <= 1e-10, "free conjugation defect {}", check.defect);
}

#[test]
fn vacuum_number_matches_oracle() {
    let (h1, h2) = matched_instance();
    let basis = FockBasis::<f64>::new(2, 14, 20_000).unwrap();
    let gen = second_quantize(&basis, &h1, &h2, c(0.0, 0.0)).unwrap();
    let exact = ExactEvolution::new(&gen).unwrap();
    let n_op = basis.number_operator();
    for &t in &[0.2, 0.5] {
        let psi = exact.apply(&basis.vacuum(), t);
        let n_psi = linalg::matvec(&n_op, &psi);
        let mut expect = c(0.0, 0.0);
        for (a, b) in psi.iter().zip(n_psi.iter()) {
            expect += a.conj() * b;
        }
        let mut src = constant_source(&h1, &h2);
        let (pair, _) = propagate(&mut src, 2, 1.0, 0.0, t, 1e-4, PropagationOptions::default()).unwrap();
        let got = pair.vacuum_number();
        assert!(
            (got - expect.re).abs() <= 1e-6,
            "vacuum number mismatch at t={t}: {got} vs {}",
            expect.re
        );
        assert!(expect.im.abs() < 1e-12);
    }
}

#[test]
fn one_particle_sector_preserved() {
    let (h1, h2) = matched_instance();
    let basis = FockBasis::<f64>::new(2, 14, 20_000).unwrap();
    let gen = second_quantize(&basis, &h1, &h2, c(0.0, 0.0)).unwrap();
    let exact = ExactEvolution::new(&gen).unwrap();
    let t = 0.5;
    let fock_u = exact.unitary(t);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..5 {
        let f = random_vector(&mut rng, 2);
        // U* a*(f) U Omega
        let z0 = linalg::matvec(&fock_u, &basis.vacuum());
        let z1 = linalg::matvec(&basis.creator_smeared(&f), &z0);
        let z = linalg::matvec(&linalg::adjoint(&fock_u), &z1);
        let weights = basis.sector_weights(&z);
        let total: f64 = weights.iter().sum();
        let outside: f64 = weights
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != 1)
            .map(|(_, w)| w)
            .sum();
        assert!(
            outside / total <= 1e-8,
            "weight outside the one-particle sector: {}",
            outside / total
        );
    }
}

#[test]
fn quasi_free_characteristic_function() {
    let (h1, h2) = matched_instance();
    let basis = FockBasis::<f64>::new(2, 14, 20_000).unwrap();
    let gen = second_quantize(&basis, &h1, &h2, c(0.0, 0.0)).unwrap();
    let exact = ExactEvolution::new(&gen).unwrap();
    let t = 0.5;
    let psi = exact.apply(&basis.vacuum(), t);
    let mut src = constant_source(&h1, &h2);
    let (pair, _) = propagate(&mut src, 2, 1.0, 0.0, t, 1e-4, PropagationOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xCAFE);
    for _ in 0..3 {
        let mut h = random_vector(&mut rng, 2);
        // keep s ||h|| <= 2 in the sweep below
        let norm = linalg::vec_norm(&h);
        h.mapv_inplace(|z| z * c(0.5 / norm, 0.0));
        let fe = FieldExponential::new(&basis, &h).unwrap();
        let nu = pair.map_field_vector(&h);
        let nu_sq = linalg::vec_norm(&nu).powi(2);
        let mut s = -2.0;
        while s <= 2.0 {
            let got = fe.expectation(&psi, s);
            let want = (-s * s * nu_sq / 2.0).exp();
            assert!(
                (got - c(want, 0.0)).norm() <= 1e-5,
                "characteristic function defect at s={s}: {got} vs {want}"
            );
            s += 0.25;
        }
    }
}

#[test]
fn two_mode_number_growth_matches_closed_form() {
    // Decoupled two-mode instance: each mode follows the single-mode
    // closed form, and the oracle expectation is their sum.
    let om = [0.8, 1.3];
    let ka = [0.3, 0.2];
    let h1 = ndarray::array![[c(om[0], 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(om[1], 0.0)]];
    let h2 = ndarray::array![[c(ka[0], 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(ka[1], 0.0)]];
    let basis = FockBasis::<f64>::new(2, 16, 20_000).unwrap();
    let gen = second_quantize(&basis, &h1, &h2, c(0.0, 0.0)).unwrap();
    let exact = ExactEvolution::new(&gen).unwrap();
    let n_op = basis.number_operator();
    for &t in &[0.25, 0.6] {
        let psi = exact.apply(&basis.vacuum(), t);
        let n_psi = linalg::matvec(&n_op, &psi);
        let mut got = 0.0;
        for (a, b) in psi.iter().zip(n_psi.iter()) {
            got += (a.conj() * b).re;
        }
        let want: f64 = (0..2)
            .map(|m| single_mode_closed_form(om[m], ka[m], t).1.norm_sqr())
            .sum();
        assert!(
            (got - want).abs() < 1e-8,
            "closed-form number mismatch at t={t}: {got} vs {want}"
        );
    }
}

#[test]
fn time_dependent_generator_consistency() {
    // Slowly modulated pairing: the stepped oracle and the midpoint pair
    // evolution agree on the vacuum number.
    let (h1base, h2base) = matched_instance();
    // Smaller cutoff and step count: the oracle eigendecomposes per step.
    let basis = FockBasis::<f64>::new(2, 10, 20_000).unwrap();
    let t_final = 0.3;
    let dt = 5e-4;

    struct Modulated {
        h1: CMat<f64>,
        h2: CMat<f64>,
    }
    impl GeneratorSource<f64> for Modulated {
        fn coefficients(&mut self, t: f64) -> QuadraticGenerator<f64> {
            let mut g = QuadraticGenerator::zero(2, 1.0, t);
            g.h1 = self.h1.clone();
            g.h2 = self.h2.mapv(|z| z * c((1.5 * t).cos(), 0.0));
            g
        }
        fn kinetic_lattice(&self) -> Option<&bosegas::grid::Lattice<f64>> {
            None
        }
    }

    let h1c = h1base.clone();
    let h2c = h2base.clone();
    let psi = evolve_time_dependent(
        &|t: f64| {
            let h2t = h2c.mapv(|z| z * c((1.5 * t).cos(), 0.0));
            second_quantize(&basis, &h1c, &h2t, c(0.0, 0.0)).unwrap()
        },
        &basis.vacuum(),
        t_final,
        dt,
    )
    .unwrap();
    let n_op = basis.number_operator();
    let n_psi = linalg::matvec(&n_op, &psi);
    let mut want = 0.0;
    for (a, b) in psi.iter().zip(n_psi.iter()) {
        want += (a.conj() * b).re;
    }
    let mut src = Modulated {
        h1: h1base,
        h2: h2base,
    };
    let (pair, _) = propagate(&mut src, 2, 1.0, 0.0, t_final, dt, PropagationOptions::default()).unwrap();
    let got = pair.vacuum_number();
    assert!(
        (got - want).abs() < 1e-6,
        "time-dependent vacuum number mismatch: {got} vs {want}"
    );
}
