use std::fmt::Write as _;
use std::io::Write as _;

use cartan_core::cost::{
    cheap_invariance_check, closest_lattice_point, closest_lattice_point_bruteforce, optimal_cost,
    optimal_factors_residual, single_qubit_cost, single_qubit_cost_standard_pauli, CostReport, SumZeroLattice,
};
use cartan_core::geodesic::{epsilon_sweep, OptimizerSettings, SweepResult};
use cartan_core::kak::{kak_decompose, reconstruct, KakFactors};
use cartan_core::matrix::{frobenius_distance, haar_random_special_unitary};
use cartan_core::metric::{
    pullback_gram, random_base_point, verify_gram_structure, BasePoint, GramStructureReport, GramTolerances,
    PenaltyMetric,
};
use cartan_core::pauli::{
    adapted_basis_properties, builtin_split, verify_cartan_split, verify_maximal_abelian, CartanSplit, SplitKind,
    SplitViolation,
};
use cartan_core::ComplexMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{format_float, read_json, write_json, write_text, CliResult, Failure, EXIT_NON_CONVERGENCE, EXIT_VERIFY};
use crate::{Convention, CostArgs, DecomposeArgs, RandomArgs, SplitArgs, SweepArgs, VerifyMetricArgs, VerifySplitArgs};

fn qubits_for_dim(dim: usize) -> CliResult<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Failure::precondition(format!("matrix dimension {dim} is not a power of two ≥ 2")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Resolve `--split` as a builtin name or a split file. `inferred` is the
/// qubit count implied by an input matrix, if any.
fn resolve_split(args: &SplitArgs, inferred: Option<usize>) -> CliResult<CartanSplit> {
    let split = match args.split.parse::<SplitKind>() {
        Ok(kind) => {
            let n = match (args.n, inferred, kind) {
                (Some(n), _, _) => n,
                (None, Some(n), _) => n,
                (None, None, SplitKind::SingleX) => 1,
                (None, None, SplitKind::TwoLocal) => 2,
                (None, None, SplitKind::Ai) => return Err(Failure::parse("split ai needs --n")),
            };
            builtin_split(n, kind)?
        }
        Err(e) if !std::path::Path::new(&args.split).exists() => {
            return Err(Failure::parse(format!("{e}; no split file at that path either")))
        }
        Err(_) => read_json::<CartanSplit>(&args.split)?,
    };
    if let Some(n) = args.n.filter(|&n| n != split.qubits()) {
        return Err(Failure::precondition(format!("--n {n} does not match split {} on {} qubits", split.name(), split.qubits())));
    }
    if let Some(n) = inferred.filter(|&n| n != split.qubits()) {
        return Err(Failure::precondition(format!(
            "input acts on {n} qubits but split {} acts on {}",
            split.name(),
            split.qubits()
        )));
    }
    Ok(split)
}

fn load_target(input: &str, split_args: &SplitArgs) -> CliResult<(ComplexMatrix, CartanSplit)> {
    let u: ComplexMatrix = read_json(input)?;
    let n = qubits_for_dim(u.dim())?;
    let split = resolve_split(split_args, Some(n))?;
    Ok((u, split))
}

fn check_epsilon(eps: f64) -> CliResult<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Failure::precondition(format!("epsilon must lie in (0, 1], got {eps}")))
    }
}

#[derive(Serialize)]
struct DecomposeOutput<'a> {
    split: &'a str,
    removed_global_phase: f64,
    reconstruction_residual: f64,
    factors: &'a KakFactors,
}

pub fn decompose(args: &DecomposeArgs) -> CliResult<i32> {
    let (u, split) = load_target(&args.input, &args.split)?;
    let factors = kak_decompose(&u, &split)?;
    let residual = frobenius_distance(&reconstruct(&factors)?, &u, true)?;
    write_json(
        &args.output,
        &DecomposeOutput {
            split: split.name(),
            removed_global_phase: factors.global_phase,
            reconstruction_residual: residual,
            factors: &factors,
        },
    )?;
    Ok(0)
}

/// The single-qubit reading of the cost under a chosen generator convention.
#[derive(Serialize)]
struct SingleQubitView {
    convention: &'static str,
    z: f64,
    closed_form_cost: f64,
    closed_form_gap: f64,
}

#[derive(Serialize)]
struct CostOutput<'a> {
    split: &'a str,
    removed_global_phase: f64,
    optimal_factors_residual: f64,
    #[serde(flatten)]
    report: &'a CostReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    single_qubit: Option<SingleQubitView>,
}

fn single_qubit_view(report: &CostReport, convention: Convention) -> SingleQubitView {
    let x = report.eigenphases.phases[0];
    let (name, z, closed) = match convention {
        Convention::StandardPauli => ("standard-pauli", x, single_qubit_cost_standard_pauli(x)),
        Convention::PaperHalved => ("paper-halved", 2.0 * x, single_qubit_cost(0.0, 2.0 * x, 0.0)),
    };
    SingleQubitView { convention: name, z, closed_form_cost: closed, closed_form_gap: (closed - report.cost).abs() }
}

pub fn cost(args: &CostArgs) -> CliResult<i32> {
    let (u, split) = load_target(&args.input, &args.split)?;
    let convention = args.convention;
    if split.qubits() != 1 && convention == Convention::PaperHalved {
        return Err(Failure::precondition("--convention paper-halved applies to single-qubit targets only"));
    }
    let report = optimal_cost(&u, &split)?;
    let residual = optimal_factors_residual(&report, &u)?;
    let single_qubit = (split.qubits() == 1).then(|| single_qubit_view(&report, convention));
    write_json(
        &args.output,
        &CostOutput {
            split: split.name(),
            removed_global_phase: report.factors.global_phase,
            optimal_factors_residual: residual,
            report: &report,
            single_qubit,
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Serialize)]
struct VerifyOutput<'a, T: Serialize> {
    suite: &'static str,
    split: &'a str,
    passed: bool,
    checks: &'a [Check],
    details: T,
}

fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{:<width$}  {verdict}  {}", c.name, c.detail);
    }
    out
}

/// Print the table (stdout, or stderr when the JSON report takes stdout)
/// and optionally the JSON report; exit 0 iff every check passed.
fn finish_verify<T: Serialize>(
    suite: &'static str,
    split: &CartanSplit,
    checks: &[Check],
    extra_lines: &[String],
    details: T,
    output: Option<&str>,
) -> CliResult<i32> {
    let mut table = render_table(checks);
    for line in extra_lines {
        let _ = writeln!(table, "{line}");
    }
    let passed = checks.iter().all(|c| c.passed);
    let _ = writeln!(table, "{suite}: {}", if passed { "all checks passed" } else { "FAILED" });
    match output {
        Some("-") => {
            let _ = std::io::stderr().write_all(table.as_bytes());
        }
        _ => write_text("-", &table)?,
    }
    if let Some(path) = output {
        write_json(path, &VerifyOutput { suite, split: split.name(), passed, checks, details })?;
    }
    Ok(if passed { 0 } else { EXIT_VERIFY })
}

#[derive(Serialize)]
struct SplitDetails {
    violations: Vec<SplitViolation>,
    lattice_max_gap: Option<f64>,
}

pub fn verify_split(args: &VerifySplitArgs) -> CliResult<i32> {
    let split = resolve_split(&args.split, None)?;
    let report = verify_cartan_split(&split, 1e-12);
    let mut checks = vec![
        Check::new("[l,l] in l", report.ll_ok, ""),
        Check::new("[p,l] in p", report.pl_ok, ""),
        Check::new("[p,p] in l", report.pp_ok, ""),
        Check::new("l and p partition the strings", report.orthogonal_ok, ""),
        Check::new("[p,l] spans p", report.spanning_ok, ""),
        Check::new("z abelian inside p", report.z_ok, ""),
    ];
    let structural = report.is_valid();
    checks.push(Check::new("z maximal abelian", structural && verify_maximal_abelian(&split), ""));

    match adapted_basis_properties(&split, args.samples, args.seed) {
        Ok(r) => checks.push(Check::new(
            "adapted frame",
            r.passed,
            format!("max |Im| {:.2e}, max off-diagonal {:.2e}", r.max_imaginary, r.max_off_diagonal),
        )),
        Err(e) => checks.push(Check::new("adapted frame", false, e.to_string())),
    }

    if structural {
        let u = haar_random_special_unitary(split.dim(), args.seed);
        match cheap_invariance_check(&u, &split, args.samples, args.seed) {
            Ok(r) => checks.push(Check::new(
                "cost invariant under free moves",
                r.passed,
                format!("{} samples, max deviation {:.2e}", r.samples, r.max_deviation),
            )),
            Err(e) => checks.push(Check::new("cost invariant under free moves", false, e.to_string())),
        }
    } else {
        checks.push(Check::new("cost invariant under free moves", false, "skipped: split relations fail"));
    }

    // The brute-force search is exponential in N; it is only run up to N = 8.
    let mut lattice_max_gap = None;
    if split.dim() <= 8 {
        let gap = lattice_oracle_gap(split.dim(), args.samples, args.seed)?;
        lattice_max_gap = Some(gap);
        checks.push(Check::new(
            "lattice search matches brute force",
            gap <= 1e-12,
            format!("{} samples, max distance gap {gap:.2e}", args.samples),
        ));
    }

    let lines: Vec<String> = report
        .violations
        .iter()
        .map(|v| format!("violation {}: [{}, {}] -> {}", v.relation, v.left, v.right, v.result))
        .collect();
    let details = SplitDetails { violations: report.violations.clone(), lattice_max_gap };
    finish_verify("verify-split", &split, &checks, &lines, details, args.output.as_deref())
}

fn lattice_oracle_gap(n: usize, samples: usize, seed: u64) -> CliResult<f64> {
    let lattice = SumZeroLattice::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI)).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let fast = closest_lattice_point(&x)?;
        let brute = closest_lattice_point_bruteforce(&x, 3);
        worst = worst.max((lattice.distance(&x, &fast) - lattice.distance(&x, &brute)).abs());
    }
    Ok(worst)
}

#[derive(Serialize)]
struct MetricPoint {
    base: BasePoint,
    report: GramStructureReport,
    richardson_residual: f64,
}

#[derive(Serialize)]
struct MetricDetails {
    epsilon: f64,
    fd_step: f64,
    points: Vec<MetricPoint>,
}

pub fn verify_metric(args: &VerifyMetricArgs) -> CliResult<i32> {
    check_epsilon(args.epsilon)?;
    let split = resolve_split(&args.split, None)?;
    let metric = PenaltyMetric::new(split.clone(), args.epsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut bases = vec![BasePoint::origin(split.qubits())];
    bases.extend((0..args.points).map(|_| random_base_point(&split, 1.0, 1.0, &mut rng)));

    let mut points = Vec::new();
    for base in bases {
        let gram = pullback_gram(&base, &metric, args.fd_step)?;
        let report = verify_gram_structure(&gram, &metric, GramTolerances::default())?;
        points.push(MetricPoint { base, report, richardson_residual: gram.richardson_residual });
    }

    let worst = |f: fn(&GramStructureReport) -> f64| points.iter().map(|p| f(&p.report)).fold(0.0f64, f64::max);
    let all = |f: fn(&GramStructureReport) -> bool| points.iter().all(|p| f(&p.report));
    let g33: Vec<f64> = points.iter().filter_map(|p| p.report.g33_relative_residual).collect();
    let min_eig = points.iter().map(|p| p.report.gram_min_eigenvalue).fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::new(
            "off-diagonal blocks vanish",
            all(|r| r.block_diagonal_ok),
            format!(
                "max |G12| {:.2e}, max |G13| {:.2e}, max |G23| {:.2e}",
                worst(|r| r.max_g12),
                worst(|r| r.max_g13),
                worst(|r| r.max_g23)
            ),
        ),
        Check::new("G22 = I", all(|r| r.g22_ok), format!("max residual {:.2e}", worst(|r| r.g22_residual))),
        Check::new(
            "G11 = eps BCH_L^T BCH_L",
            all(|r| r.g11_ok),
            format!("max relative residual {:.2e}", worst(|r| r.g11_relative_residual)),
        ),
        Check::new(
            "G33 at Z = 0",
            all(|r| r.g33_ok),
            format!("max relative residual {:.2e}", g33.iter().copied().fold(0.0f64, f64::max)),
        ),
        Check::new("Gram positive semidefinite", all(|r| r.psd_ok), format!("min eigenvalue {min_eig:.2e}")),
    ];
    let lines = vec![format!("{} base points (origin first), epsilon {}, fd step {}", points.len(), args.epsilon, args.fd_step)];
    let details = MetricDetails { epsilon: args.epsilon, fd_step: args.fd_step, points };
    finish_verify("verify-metric", &split, &checks, &lines, details, args.output.as_deref())
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    split: &'a str,
    segments: usize,
    restarts: usize,
    seed: u64,
    #[serde(flatten)]
    result: &'a SweepResult,
}

fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("epsilon,numeric_cost,endpoint_residual,feasible_cost,relative_error,analytic_cost\n");
    for r in &result.rows {
        let fields = [r.epsilon, r.numeric_cost, r.endpoint_residual, r.feasible_cost, r.relative_error, result.analytic_cost];
        let _ = writeln!(out, "{}", fields.map(format_float).join(","));
    }
    out
}

pub fn sweep(args: &SweepArgs) -> CliResult<i32> {
    for &eps in &args.epsilons {
        check_epsilon(eps)?;
    }
    let (u, split) = load_target(&args.input, &args.split)?;
    if split.dim() >= 4 && !args.slow {
        return Err(Failure::precondition(format!(
            "sweeps on SU({}) and larger are slow and opt-in; pass --slow to run them",
            split.dim()
        )));
    }
    let settings = OptimizerSettings::new(args.segments, args.restarts, args.seed);
    let result = epsilon_sweep(&u, &split, &args.epsilons, &settings)?;
    write_json(
        &args.output,
        &SweepOutput { split: split.name(), segments: args.segments, restarts: args.restarts, seed: args.seed, result: &result },
    )?;
    if let Some(path) = &args.csv {
        write_text(path, &sweep_csv(&result))?;
    }
    if result.failures.is_empty() {
        Ok(0)
    } else {
        for (eps, msg) in &result.failures {
            eprintln!("epsilon {eps}: {msg}");
        }
        Ok(EXIT_NON_CONVERGENCE)
    }
}

pub fn random(args: &RandomArgs) -> CliResult<i32> {
    if args.n == 0 || args.n > 4 {
        return Err(Failure::precondition(format!("--n must lie in 1..=4, got {}", args.n)));
    }
    write_json(&args.output, &haar_random_special_unitary(1 << args.n, args.seed))?;
    Ok(0)
}
