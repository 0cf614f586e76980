use cartan_core::cost::optimal_cost;
use cartan_core::geodesic::{evolve, path_cost, ControlPath, Segment};
use cartan_core::kak::{kak_decompose, reconstruct};
use cartan_core::matrix::{expm, frobenius_distance, haar_random_special_unitary, logm_unitary};
use cartan_core::metric::PenaltyMetric;
use cartan_core::pauli::{builtin_split, i_times, HamiltonianVector, PauliString, SplitKind, Subspace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn split_for(case: u8) -> cartan_core::pauli::CartanSplit {
    match case % 5 {
        0 => builtin_split(1, SplitKind::SingleX),
        1 => builtin_split(2, SplitKind::TwoLocal),
        k => builtin_split(k as usize - 1, SplitKind::Ai),
    }
    .unwrap()
}

fn coeffs(n: usize, scale: f64) -> impl Strategy<Value = HamiltonianVector> {
    prop::collection::vec(-scale..scale, (1 << (2 * n)) - 1)
        .prop_map(move |c| HamiltonianVector::from_coeffs(n, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn string_product_matches_dense(n in 1usize..=3, a in 0usize..64, b in 0usize..64) {
        let p = PauliString::from_code(n, a % (1 << (2 * n)));
        let q = PauliString::from_code(n, b % (1 << (2 * n)));
        let (phase, r) = p.multiply(&q);
        let dense = &p.dense() * &q.dense();
        let expected = r.dense().scale(phase.to_complex());
        prop_assert!((&dense - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn string_commutator_matches_dense(n in 1usize..=3, a in 0usize..64, b in 0usize..64) {
        let p = PauliString::from_code(n, a % (1 << (2 * n)));
        let q = PauliString::from_code(n, b % (1 << (2 * n)));
        let dense = p.dense().commutator(&q.dense());
        match p.commutator(&q) {
            None => prop_assert!(dense.max_abs() < 1e-15),
            Some((c, r)) => prop_assert!((&dense - &r.dense().scale(c)).max_abs() < 1e-14),
        }
    }

    #[test]
    fn hamiltonian_dense_round_trip(h in coeffs(2, 1.0)) {
        let back = HamiltonianVector::from_dense(&h.dense()).unwrap();
        prop_assert!((&back - &h).norm() < 1e-13);
    }

    #[test]
    fn log_inverts_exp_below_pi(h in coeffs(2, 0.15)) {
        let x = i_times(&h);
        let log = logm_unitary(&expm(&x).unwrap()).unwrap();
        prop_assert!((&log - &x).max_abs() < 1e-10);
    }

    #[test]
    fn kak_reconstructs(case in 0u8..5, seed in any::<u64>()) {
        let split = split_for(case);
        let u = haar_random_special_unitary(split.dim(), seed);
        let f = kak_decompose(&u, &split).unwrap();
        prop_assert!(frobenius_distance(&reconstruct(&f).unwrap(), &u, true).unwrap() < 1e-9);
        prop_assert!(split.distance_outside(&f.l, Subspace::L) < 1e-9);
        prop_assert!(split.distance_outside(&f.m, Subspace::L) < 1e-9);
        prop_assert!(split.distance_outside(&f.z, Subspace::Z) < 1e-9);
    }

    #[test]
    fn cost_ignores_free_moves(case in 0u8..5, seed in any::<u64>()) {
        let split = split_for(case);
        let u = haar_random_special_unitary(split.dim(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k1 = expm(&i_times(&split.random_element(Subspace::L, 3.0, &mut rng))).unwrap();
        let k2 = expm(&i_times(&split.random_element(Subspace::L, 3.0, &mut rng))).unwrap();
        let base = optimal_cost(&u, &split).unwrap();
        let dressed = optimal_cost(&(&(&k1 * &u) * &k2), &split).unwrap();
        prop_assert!((base.cost - dressed.cost).abs() < 1e-8);
        prop_assert!(base.cost <= base.eigenphases.norm() + 1e-12);
    }

    #[test]
    fn path_cost_is_reparameterization_invariant(h in coeffs(1, 2.0), dt in 0.05f64..1.0, s in 0.2f64..5.0) {
        let metric = PenaltyMetric::new(builtin_split(1, SplitKind::SingleX).unwrap(), 0.05).unwrap();
        let one = ControlPath::new(vec![Segment { h: h.clone(), dt }]).unwrap();
        let scaled = ControlPath::new(vec![Segment { h: h.scale(s), dt: dt / s }]).unwrap();
        let halves = ControlPath::new(vec![Segment { h: h.clone(), dt: dt / 2.0 }, Segment { h, dt: dt / 2.0 }]).unwrap();
        let c = path_cost(&one, &metric).unwrap();
        prop_assert!((path_cost(&scaled, &metric).unwrap() - c).abs() < 1e-12 * c.max(1.0));
        prop_assert!((path_cost(&halves, &metric).unwrap() - c).abs() < 1e-12 * c.max(1.0));
        let u = evolve(&one, 2).unwrap();
        prop_assert!((&evolve(&scaled, 2).unwrap() - &u).max_abs() < 1e-12);
        prop_assert!((&evolve(&halves, 2).unwrap() - &u).max_abs() < 1e-12);
    }
}
