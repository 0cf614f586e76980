//! Acceptance criteria, one test per criterion. Each test writes a single
//! PASS/FAIL line to stderr (uncaptured) before asserting.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::io::Write;
use std::time::{Duration, Instant};

use cartan_core::cost::{
    cheap_invariance_check, closest_lattice_point, closest_lattice_point_bruteforce, optimal_cost, single_qubit_cost,
    SumZeroLattice,
};
use cartan_core::geodesic::{epsilon_sweep, OptimizerSettings};
use cartan_core::kak::{kak_decompose, reconstruct};
use cartan_core::matrix::{expm, frobenius_distance, haar_random_special_unitary, C64};
use cartan_core::metric::{
    bch_defect_slope, pullback_gram, random_base_point, verify_gram_structure, GramTolerances, PenaltyMetric,
    DEFAULT_FD_STEP,
};
use cartan_core::pauli::{builtin_split, i_times, CartanSplit, HamiltonianVector, SplitKind, Subspace};
use cartan_core::ComplexMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr();
    let _ = writeln!(err, "acceptance {criterion}: {verdict} ({detail})");
}

fn exp_i(h: &HamiltonianVector) -> ComplexMatrix {
    expm(&i_times(h)).unwrap()
}

fn dressed(core: &ComplexMatrix, split: &CartanSplit, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let k1 = split.random_element(Subspace::L, 2.0, rng);
    let k2 = split.random_element(Subspace::L, 2.0, rng);
    &(&exp_i(&k1) * core) * &exp_i(&k2)
}

fn random_so(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(n, |_, _| C64::new(rng.gen_range(-2.0..2.0), 0.0));
    expm(&(&a - &a.transpose()).scale_real(0.5)).unwrap().real_part()
}

/// Two-qubit cores with coinciding interaction coefficients, plus SU(8)
/// elements `A·D·Bᵀ` whose `D` repeats phases.
fn degenerate_cases(rng: &mut ChaCha8Rng) -> Vec<(ComplexMatrix, CartanSplit)> {
    let two = builtin_split(2, SplitKind::TwoLocal).unwrap();
    let ai3 = builtin_split(3, SplitKind::Ai).unwrap();
    let mut out = Vec::new();
    let angles = [0.0, FRAC_PI_4 / 2.0, FRAC_PI_4, PI / 2.0, 3.0 * FRAC_PI_4];
    for k in 0..60 {
        let a = angles[k % angles.len()];
        let b = angles[(k / angles.len()) % angles.len()];
        let coeffs = match k % 3 {
            0 => [a, a, a],
            1 => [a, a, b],
            _ => [a, 0.0, 0.0],
        };
        let core = exp_i(
            &HamiltonianVector::from_terms(2, &[("XX", coeffs[0]), ("YY", coeffs[1]), ("ZZ", coeffs[2])]).unwrap(),
        );
        out.push((dressed(&core, &two, rng), two.clone()));
    }
    for k in 0..40 {
        let a = rng.gen_range(-1.0..1.0);
        let b = if k % 2 == 0 { a } else { rng.gen_range(-1.0..1.0) };
        let mut x = vec![a, a, a, b, b, -0.5, -0.5, 0.0];
        let mean = x.iter().sum::<f64>() / 8.0;
        x.iter_mut().for_each(|v| *v -= mean);
        let d = ComplexMatrix::from_phases(&x);
        let u = &(&random_so(8, rng) * &d) * &random_so(8, rng).transpose();
        out.push((u, ai3.clone()));
    }
    out
}

fn round_trip_residual(u: &ComplexMatrix, split: &CartanSplit) -> Result<f64, String> {
    let f = kak_decompose(u, split).map_err(|e| e.to_string())?;
    frobenius_distance(&reconstruct(&f).map_err(|e| e.to_string())?, u, true).map_err(|e| e.to_string())
}

#[test]
fn criterion_1_kak_round_trip() {
    let start = Instant::now();
    let two = builtin_split(2, SplitKind::TwoLocal).unwrap();
    let ai3 = builtin_split(3, SplitKind::Ai).unwrap();
    let mut cases: Vec<(ComplexMatrix, CartanSplit)> = Vec::new();
    for seed in 0..1000 {
        cases.push((haar_random_special_unitary(4, seed), two.clone()));
    }
    for seed in 0..100 {
        cases.push((haar_random_special_unitary(8, 10_000 + seed), ai3.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let degenerate = degenerate_cases(&mut rng);
    let degenerate_count = degenerate.len();
    cases.extend(degenerate);

    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for (i, (u, split)) in cases.iter().enumerate() {
        match round_trip_residual(u, split) {
            Ok(r) => worst = worst.max(r),
            Err(e) => errors.push(format!("case {i}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let pass = errors.is_empty() && worst <= 1e-8 && elapsed <= Duration::from_secs(60);
    report(
        "1 (KAK round trip)",
        pass,
        &format!(
            "{} cases incl. {degenerate_count} degenerate, worst residual {worst:.2e}, {} errors, {:.2?}",
            cases.len(),
            errors.len(),
            elapsed
        ),
    );
    assert!(pass, "errors: {errors:?}");
}

#[test]
fn criterion_2_lattice_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut total = 0;
    for n in [2usize, 4, 8] {
        let lattice = SumZeroLattice::new(n);
        for _ in 0..1000 {
            let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0 * PI..2.0 * PI)).collect();
            let mean = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|v| *v -= mean);
            let fast = closest_lattice_point(&x).unwrap();
            let brute = closest_lattice_point_bruteforce(&x, 3);
            assert!(lattice.contains(&fast) && lattice.contains(&brute));
            worst = worst.max((lattice.distance(&x, &fast) - lattice.distance(&x, &brute)).abs());
            total += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && elapsed <= Duration::from_secs(10);
    report("2 (lattice oracle)", pass, &format!("{total} targets, worst distance gap {worst:.2e}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_3_single_qubit_specialization() {
    let start = Instant::now();
    let split = builtin_split(1, SplitKind::SingleX).unwrap();

    let mut exact_ok = true;
    for k in -100..=100 {
        let z = k as f64 * PI / 100.0;
        exact_ok &= single_qubit_cost(0.0, z, 0.0) == z.abs() / SQRT_2;
    }

    let periodic_oracle = |z: f64| (-4..=4).map(|m| (z - 2.0 * m as f64 * PI).abs()).fold(f64::INFINITY, f64::min) / SQRT_2;
    let standard_oracle = |z: f64| SQRT_2 * (-8..=8).map(|m| (z - m as f64 * PI).abs()).fold(f64::INFINITY, f64::min);
    let mut periodic_gap = 0.0f64;
    let mut pipeline_gap = 0.0f64;
    let mut mapping_gap = 0.0f64;
    for k in -400..=400 {
        let z = k as f64 * PI / 100.0;
        periodic_gap = periodic_gap.max((single_qubit_cost(0.0, z, 0.0) - periodic_oracle(z)).abs());
        let standard = optimal_cost(&exp_i(&HamiltonianVector::from_terms(1, &[("Z", -z)]).unwrap()), &split)
            .unwrap()
            .cost;
        pipeline_gap = pipeline_gap.max((standard - standard_oracle(z)).abs());
        // Halving the generator maps the standard-Pauli reading onto the closed form.
        let halved = optimal_cost(&exp_i(&HamiltonianVector::from_terms(1, &[("Z", -z / 2.0)]).unwrap()), &split)
            .unwrap()
            .cost;
        mapping_gap = mapping_gap.max((halved - single_qubit_cost(0.0, z, 0.0)).abs());
    }
    let elapsed = start.elapsed();
    let pass = exact_ok
        && periodic_gap <= 1e-12
        && pipeline_gap <= 1e-9
        && mapping_gap <= 1e-9
        && elapsed <= Duration::from_secs(5);
    report(
        "3 (single-qubit closed form)",
        pass,
        &format!(
            "grid exact {exact_ok}, periodic gap {periodic_gap:.2e}, pipeline gap {pipeline_gap:.2e}, convention mapping gap {mapping_gap:.2e}, {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_canonical_two_qubit_values() {
    let split = builtin_split(2, SplitKind::TwoLocal).unwrap();
    let cnot_class = exp_i(&HamiltonianVector::from_terms(2, &[("XX", FRAC_PI_4)]).unwrap());
    let swap_class = exp_i(
        &HamiltonianVector::from_terms(2, &[("XX", FRAC_PI_4), ("YY", FRAC_PI_4), ("ZZ", FRAC_PI_4)]).unwrap(),
    );
    let mut cnot = ComplexMatrix::zeros(4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        cnot[(r, c)] = C64::new(1.0, 0.0);
    }
    let cases = [
        ("XX class", cnot_class, PI / 2.0, 41u64),
        ("CNOT", cnot, PI / 2.0, 42),
        ("SWAP class", swap_class, 3f64.sqrt() / 2.0 * PI, 43),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, u, expected, seed) in cases {
        let r = cheap_invariance_check(&u, &split, 100, seed).unwrap();
        let value_gap = (r.base_cost - expected).abs();
        pass &= value_gap <= 1e-9 && r.max_deviation <= 1e-8;
        details.push(format!("{name}: gap {value_gap:.2e}, dressing deviation {:.2e}", r.max_deviation));
    }
    report("4 (canonical two-qubit costs)", pass, &details.join("; "));
    assert!(pass);
}

struct GramSweep {
    max_g12: f64,
    max_g13: f64,
    max_g23: f64,
    g22: f64,
    g11: f64,
    points: usize,
    elapsed: Duration,
}

/// 20 single-qubit and 10 two-qubit base points with `|L|, |M| ≤ 1` at ε = 0.01.
fn gram_sweep() -> GramSweep {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(515);
    let mut out = GramSweep { max_g12: 0.0, max_g13: 0.0, max_g23: 0.0, g22: 0.0, g11: 0.0, points: 0, elapsed: Duration::ZERO };
    for (kind, n, count) in [(SplitKind::SingleX, 1, 20), (SplitKind::TwoLocal, 2, 10)] {
        let split = builtin_split(n, kind).unwrap();
        let metric = PenaltyMetric::new(split.clone(), 0.01).unwrap();
        for _ in 0..count {
            let base = random_base_point(&split, 1.0, 1.0, &mut rng);
            let gram = pullback_gram(&base, &metric, DEFAULT_FD_STEP).unwrap();
            let r = verify_gram_structure(&gram, &metric, GramTolerances::default()).unwrap();
            out.max_g12 = out.max_g12.max(r.max_g12);
            out.max_g13 = out.max_g13.max(r.max_g13);
            out.max_g23 = out.max_g23.max(r.max_g23);
            out.g22 = out.g22.max(r.g22_residual);
            out.g11 = out.g11.max(r.g11_relative_residual);
            out.points += 1;
        }
    }
    out.elapsed = start.elapsed();
    out
}

#[test]
fn criterion_5a_off_diagonal_blocks_vanish() {
    let s = gram_sweep();
    let worst = s.max_g12.max(s.max_g13).max(s.max_g23);
    let pass = worst <= 1e-4 && s.elapsed <= Duration::from_secs(120);
    report(
        "5a (Gram off-diagonal blocks within 1e-4)",
        pass,
        &format!(
            "{} points at eps = 0.01: max |G12| {:.2e}, max |G13| {:.2e}, max |G23| {:.2e}, {:.2?}",
            s.points, s.max_g12, s.max_g13, s.max_g23, s.elapsed
        ),
    );
    assert!(pass, "largest off-diagonal Gram entry {worst:e}");
}

#[test]
fn criterion_5b_central_block_is_identity() {
    let s = gram_sweep();
    let pass = s.g22 <= 1e-5 && s.elapsed <= Duration::from_secs(120);
    report("5b (G22 = I within 1e-5)", pass, &format!("{} points, worst residual {:.2e}, {:.2?}", s.points, s.g22, s.elapsed));
    assert!(pass);
}

#[test]
fn criterion_5c_first_block_matches_bch() {
    let s = gram_sweep();
    let pass = s.g11 <= 1e-4 && s.elapsed <= Duration::from_secs(120);
    report(
        "5c (G11 = eps BCH^T BCH within 1e-4 relative)",
        pass,
        &format!("{} points, worst relative residual {:.2e}, {:.2?}", s.points, s.g11, s.elapsed),
    );
    assert!(pass);
}

/// `e^{iaX}·e^{izZ}·e^{ibX}` for the sweep targets.
fn single_qubit_target(a: f64, z: f64, b: f64) -> ComplexMatrix {
    let h = |s: &str, c: f64| HamiltonianVector::from_terms(1, &[(s, c)]).unwrap();
    &(&exp_i(&h("X", a)) * &exp_i(&h("Z", z))) * &exp_i(&h("X", b))
}

#[test]
fn criterion_6_epsilon_sweep_single_qubit() {
    let start = Instant::now();
    let split = builtin_split(1, SplitKind::SingleX).unwrap();
    let targets = [(0.3, 0.6, -0.2), (-0.25, 0.8, 0.15), (0.1, 1.0, 0.3), (0.2, 1.2, -0.3), (-0.3, 0.7, 0.25)];
    let epsilons = [1e-1, 1e-2, 1e-3];
    let mut pass = true;
    let mut details = Vec::new();
    for (i, &(a, z, b)) in targets.iter().enumerate() {
        let u = single_qubit_target(a, z, b);
        let sweep = epsilon_sweep(&u, &split, &epsilons, &OptimizerSettings::new(6, 2, 600 + i as u64)).unwrap();
        let errs = sweep.relative_errors();
        let complete = sweep.failures.is_empty() && errs.len() == epsilons.len();
        let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
        let bracketed = sweep.rows.iter().all(|r| r.upper_bound_ok && r.lower_bound_ok);
        let final_ok = errs.last().is_some_and(|&e| e <= 0.05);
        pass &= complete && monotone && bracketed && final_ok;
        details.push(format!(
            "target {i}: analytic {:.4}, rel errors [{}]",
            sweep.analytic_cost,
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= Duration::from_secs(600);
    report("6 (epsilon sweep, single qubit)", pass, &format!("{}; {elapsed:.2?}", details.join("; ")));
    assert!(pass);
}

#[test]
#[ignore = "slow SU(4) sweep; run with --ignored"]
fn criterion_6_epsilon_sweep_two_qubit_slow() {
    let split = builtin_split(2, SplitKind::TwoLocal).unwrap();
    let mut cnot = ComplexMatrix::zeros(4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        cnot[(r, c)] = C64::new(1.0, 0.0);
    }
    let sweep = epsilon_sweep(&cnot, &split, &[1e-1, 1e-2], &OptimizerSettings::new(6, 1, 700)).unwrap();
    let last = *sweep.numeric_costs.last().unwrap();
    let ratio = last / (PI / 2.0);
    let pass = sweep.failures.is_empty() && (0.95..=1.2).contains(&ratio);
    report("6-slow (epsilon sweep, CNOT class)", pass, &format!("numeric/analytic at eps = 1e-2: {ratio:.4}"));
    assert!(pass);
}

#[test]
fn criterion_7_bch_defect_order() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let l = HamiltonianVector::from_coeffs(1, (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap();
        let p = HamiltonianVector::from_coeffs(1, (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let slope = bch_defect_slope(&l, &p, 1e-2).unwrap();
        worst = worst.max((slope - 2.0).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 0.1 && elapsed <= Duration::from_secs(5);
    report("7 (BCH defect order)", pass, &format!("50 pairs, worst |slope - 2| {worst:.3}, {elapsed:.2?}"));
    assert!(pass);
}
