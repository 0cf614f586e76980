//! Piecewise-constant control paths and a derivative-free optimizer that
//! brackets the analytic cost from above as `ε → 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cost::optimal_cost;
use crate::error::{CartanError, Result};
use crate::kak::project_to_special;
use crate::matrix::{expm, frobenius_distance, log_special_orthogonal, logm_unitary, ComplexMatrix, C64};
use crate::metric::{hamiltonian_cost, PenaltyMetric};
use crate::pauli::{i_times, CartanSplit, HamiltonianVector, Subspace};

/// Endpoint residual required before the final repair step.
pub const RESIDUAL_TOL: f64 = 1e-4;
/// Penalty weights tried in turn.
pub const PENALTY_SCHEDULE: [f64; 4] = [10.0, 1e2, 1e3, 1e4];
/// A pre-repair residual above this is treated as non-convergence.
const REPAIR_RADIUS: f64 = 1e-2;
/// Slack allowed below the analytic value when checking the lower bound.
pub const LOWER_BOUND_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub h: HamiltonianVector,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlPath {
    pub segments: Vec<Segment>,
}

impl ControlPath {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if let Some(s) = segments.iter().find(|s| s.dt.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
            return Err(CartanError::Precondition(format!("segment duration must be positive, got {}", s.dt)));
        }
        Ok(Self { segments })
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.dt).sum()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// `e^{−iH·dt}`, with a closed form on one qubit.
pub fn segment_unitary(h: &HamiltonianVector, dt: f64) -> Result<ComplexMatrix> {
    if h.qubits() == 1 {
        let c = h.coeffs();
        let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        let theta = r * dt;
        let (s, co) = theta.sin_cos();
        let k = if r > 0.0 { s / r } else { dt };
        // cos θ·I − i·(sin θ / r)·(c_x X + c_y Y + c_z Z)
        let m = ComplexMatrix::from_vec(
            2,
            vec![
                C64::new(co, -k * c[2]),
                C64::new(-k * c[1], -k * c[0]),
                C64::new(k * c[1], -k * c[0]),
                C64::new(co, k * c[2]),
            ],
        )?;
        return Ok(m);
    }
    expm(&i_times(h).scale_real(-dt))
}

/// Ordered product `Π e^{−iH_k·dt_k}`, later segments on the left.
pub fn evolve(path: &ControlPath, dim: usize) -> Result<ComplexMatrix> {
    let mut u = ComplexMatrix::identity(dim);
    for s in &path.segments {
        u = &segment_unitary(&s.h, s.dt)? * &u;
    }
    Ok(u)
}

/// `Σ C(H_k)·dt_k`.
pub fn path_cost(path: &ControlPath, metric: &PenaltyMetric) -> Result<f64> {
    path.segments.iter().map(|s| Ok(hamiltonian_cost(&s.h, metric)? * s.dt)).sum()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

fn permutation_parity(p: &[usize]) -> i32 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Generators `(L, Z, M)` of the three-leg path for the cost-optimal `Z`.
///
/// For `W` a signed permutation with `det W = 1`, `A·D·Bᵀ = (AW)·(WᵀDW)·(BW)ᵀ`
/// and `WᵀDW` has the same phases, so every such `W` gives an equally cheap
/// `Z`. On `N ≤ 4` all of them are tried and the one minimizing `|L| + |M|`
/// is kept; larger frames keep the decomposition as computed.
pub fn feasible_generators(target: &ComplexMatrix, split: &CartanSplit) -> Result<(HamiltonianVector, HamiltonianVector, HamiltonianVector)> {
    let report = optimal_cost(target, split)?;
    let f = report.factors;
    let n = f.a.dim();
    let to_generator = |x: &ComplexMatrix| -> Result<HamiltonianVector> {
        let h = HamiltonianVector::from_dense(&split.from_adapted(&x.scale(C64::new(0.0, -1.0))))?;
        split.project(&h, Subspace::L)
    };
    let mut best = (f.l.norm() + f.m.norm(), f.l.clone(), f.z.clone(), f.m.clone());
    if n > 4 {
        return Ok((best.1, best.2, best.3));
    }
    for perm in permutations(n) {
        let parity = permutation_parity(&perm);
        for mask in 0u32..(1 << n) {
            let sign_parity = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            if parity * sign_parity != 1 {
                continue;
            }
            // Column c of W is ±e_{perm[c]}.
            let sign = |c: usize| if mask >> c & 1 == 1 { -1.0 } else { 1.0 };
            let permute = |m: &ComplexMatrix| ComplexMatrix::from_fn(n, |r, c| m[(r, perm[c])] * sign(c));
            let a = permute(&f.a);
            let b = permute(&f.b);
            let l = to_generator(&log_special_orthogonal(&a)?)?;
            let m = to_generator(&log_special_orthogonal(&b.transpose())?)?;
            let total = l.norm() + m.norm();
            if total < best.0 - 1e-12 {
                let phases: Vec<f64> = perm.iter().map(|&k| f.phases[k]).collect();
                let z = HamiltonianVector::from_dense(&split.from_adapted(&ComplexMatrix::from_real_diag(&phases)))?;
                best = (total, l, split.project(&z, Subspace::Z)?, m);
            }
        }
    }
    Ok((best.1, best.2, best.3))
}

/// Evenly timed path over `[0, 1]` realizing `e^{iL}·e^{iZ}·e^{iM}` leg by leg.
pub fn feasible_path(target: &ComplexMatrix, split: &CartanSplit, segments: usize) -> Result<ControlPath> {
    if segments < 3 {
        return Err(CartanError::Precondition(format!("need at least 3 segments, got {segments}")));
    }
    let (l, z, m) = feasible_generators(target, split)?;
    let dt = 1.0 / segments as f64;
    let outer = segments / 3;
    let middle = segments - 2 * outer;
    let mut out = Vec::with_capacity(segments);
    // M acts first, L last; e^{−iH·s·dt} = e^{iG} for H = −G/(s·dt).
    for (g, count) in [(&m, outer), (&z, middle), (&l, outer)] {
        let h = g.scale(-1.0 / (count as f64 * dt));
        out.extend(std::iter::repeat_n(Segment { h, dt }, count));
    }
    ControlPath::new(out)
}

/// Constant-generator path `e^{−iH} = U` with `H = i·log U`.
pub fn direct_path(target: &ComplexMatrix, segments: usize) -> Result<ControlPath> {
    let (u, _) = project_to_special(target)?;
    let x = logm_unitary(&u)?;
    let h = HamiltonianVector::from_dense(&x.scale(C64::new(0.0, 1.0)))?;
    let dt = 1.0 / segments as f64;
    ControlPath::new(vec![Segment { h, dt }; segments])
}

#[derive(Debug, Clone)]
pub struct OptimizerSettings {
    pub segments: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Objective evaluations per penalty stage, per variable.
    pub evals_per_variable: usize,
    pub min_step: f64,
}

impl OptimizerSettings {
    pub fn new(segments: usize, restarts: usize, seed: u64) -> Self {
        Self { segments, restarts, seed, evals_per_variable: 300, min_step: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeOutcome {
    pub path: ControlPath,
    /// Path cost, excluding any penalty.
    pub cost: f64,
    pub endpoint_residual: f64,
    /// Cost of the constructed three-leg path at this ε.
    pub feasible_cost: f64,
}

/// Incremental evaluator for fixed-`dt` paths.
struct Evaluator<'a> {
    target: &'a ComplexMatrix,
    metric: &'a PenaltyMetric,
    dt: f64,
    n: usize,
    width: usize,
    dim: usize,
}

#[derive(Clone)]
struct State {
    x: Vec<f64>,
    units: Vec<ComplexMatrix>,
    costs: Vec<f64>,
    /// `before[k]` = product of segments `< k`; `after[k]` = of segments `> k`.
    before: Vec<ComplexMatrix>,
    after: Vec<ComplexMatrix>,
    cost: f64,
    residual: f64,
}

impl Evaluator<'_> {
    fn segment(&self, x: &[f64], k: usize) -> Result<(ComplexMatrix, f64)> {
        let h = HamiltonianVector::from_coeffs(self.n, x[k * self.width..(k + 1) * self.width].to_vec())?;
        Ok((segment_unitary(&h, self.dt)?, hamiltonian_cost(&h, self.metric)? * self.dt))
    }

    fn residual(&self, u: &ComplexMatrix) -> Result<f64> {
        frobenius_distance(u, self.target, true)
    }

    fn state(&self, x: Vec<f64>) -> Result<State> {
        let segs = x.len() / self.width;
        let mut units = Vec::with_capacity(segs);
        let mut costs = Vec::with_capacity(segs);
        for k in 0..segs {
            let (u, c) = self.segment(&x, k)?;
            units.push(u);
            costs.push(c);
        }
        let mut s = State {
            x,
            units,
            costs,
            before: Vec::new(),
            after: Vec::new(),
            cost: 0.0,
            residual: 0.0,
        };
        self.refresh(&mut s)?;
        Ok(s)
    }

    fn refresh(&self, s: &mut State) -> Result<()> {
        let segs = s.units.len();
        s.before = Vec::with_capacity(segs);
        let mut acc = ComplexMatrix::identity(self.dim);
        for u in &s.units {
            s.before.push(acc.clone());
            acc = u * &acc;
        }
        let total = acc;
        s.after = vec![ComplexMatrix::identity(self.dim); segs];
        let mut acc = ComplexMatrix::identity(self.dim);
        for k in (0..segs).rev() {
            s.after[k] = acc.clone();
            acc = &acc * &s.units[k];
        }
        s.cost = s.costs.iter().sum();
        s.residual = self.residual(&total)?;
        Ok(())
    }

    /// Objective after replacing segment `k`'s coefficients, with the new
    /// segment unitary and its cost.
    fn trial_segment(&self, s: &State, k: usize, x: &[f64], lambda: f64) -> Result<(f64, ComplexMatrix, f64)> {
        let (u, c) = self.segment(x, k)?;
        let total = &(&s.after[k] * &u) * &s.before[k];
        let residual = self.residual(&total)?;
        let cost = s.cost - s.costs[k] + c;
        Ok((cost + lambda * residual * residual, u, c))
    }

    fn segments(&self) -> usize {
        (1.0 / self.dt).round() as usize
    }
}

fn objective(s: &State, lambda: f64) -> f64 {
    s.cost + lambda * s.residual * s.residual
}

/// Coordinate pattern search with adaptive per-coordinate steps, mixed with
/// random full-space directions.
fn pattern_search(ev: &Evaluator, mut s: State, lambda: f64, budget: usize, min_step: f64, rng: &mut ChaCha8Rng) -> Result<State> {
    let d = s.x.len();
    let mut steps = vec![0.05; d];
    let mut sigma = 0.05;
    let mut evals = 0;
    let mut f = objective(&s, lambda);
    while evals < budget {
        let mut improved = false;
        for i in 0..d {
            if steps[i] < min_step {
                continue;
            }
            let k = i / ev.width;
            let mut accepted = false;
            for sign in [1.0, -1.0] {
                let mut x = s.x.clone();
                x[i] += sign * steps[i];
                let (fx, u, c) = ev.trial_segment(&s, k, &x, lambda)?;
                evals += 1;
                if fx < f {
                    s.x = x;
                    s.units[k] = u;
                    s.costs[k] = c;
                    ev.refresh(&mut s)?;
                    f = objective(&s, lambda);
                    steps[i] *= 1.6;
                    accepted = true;
                    improved = true;
                    break;
                }
            }
            if !accepted {
                steps[i] *= 0.5;
            }
        }
        for _ in 0..4 {
            if sigma < min_step {
                break;
            }
            let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let x: Vec<f64> = s.x.iter().zip(&dir).map(|(a, b)| a + sigma * b / norm).collect();
            let cand = ev.state(x)?;
            evals += 1;
            let fc = objective(&cand, lambda);
            if fc < f {
                s = cand;
                f = fc;
                sigma *= 1.6;
                improved = true;
            } else {
                sigma *= 0.7;
            }
        }
        if !improved && steps.iter().all(|&t| t < min_step) && sigma < min_step {
            break;
        }
    }
    Ok(s)
}

/// Replace the last segment so the endpoint equals the target up to phase.
fn repair_endpoint(ev: &Evaluator, s: &State) -> Result<State> {
    let segs = s.units.len();
    let total = &s.units[segs - 1] * &s.before[segs - 1];
    let overlap = (&total.adjoint() * ev.target).trace();
    let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { C64::new(1.0, 0.0) };
    let r = &ev.target.scale(phase) * &total.adjoint();
    let last = &r * &s.units[segs - 1];
    let x = logm_unitary(&last)?;
    // e^{−iH·dt} = last  ⇒  H = i·log(last)/dt.
    let h = HamiltonianVector::from_dense(&x.scale(C64::new(0.0, 1.0 / ev.dt)))?;
    let mut coeffs = s.x.clone();
    coeffs[(segs - 1) * ev.width..].copy_from_slice(h.coeffs());
    ev.state(coeffs)
}

fn path_from_state(ev: &Evaluator, s: &State) -> Result<ControlPath> {
    let segments = s
        .x
        .chunks(ev.width)
        .map(|c| Ok(Segment { h: HamiltonianVector::from_coeffs(ev.n, c.to_vec())?, dt: ev.dt }))
        .collect::<Result<Vec<_>>>()?;
    ControlPath::new(segments)
}

fn state_from_path(ev: &Evaluator, path: &ControlPath) -> Result<State> {
    if path.len() != ev.segments() || path.segments.iter().any(|s| (s.dt - ev.dt).abs() > 1e-15) {
        return Err(CartanError::Precondition("warm-start path does not match the segment grid".into()));
    }
    ev.state(path.segments.iter().flat_map(|s| s.h.coeffs().iter().copied()).collect())
}

/// Minimize path cost subject to reaching `target`, starting from the
/// constructed feasible path, the direct path, and any `warm` paths given.
pub fn optimize_path_with(
    target: &ComplexMatrix,
    metric: &PenaltyMetric,
    settings: &OptimizerSettings,
    warm: &[ControlPath],
) -> Result<OptimizeOutcome> {
    if settings.segments < 3 {
        return Err(CartanError::Precondition(format!("need at least 3 segments, got {}", settings.segments)));
    }
    let split = metric.split();
    if target.dim() != split.dim() {
        return Err(CartanError::DimensionMismatch { left: split.dim(), right: target.dim() });
    }
    let (target, _) = project_to_special(target)?;
    let n = split.qubits();
    let ev = Evaluator {
        target: &target,
        metric,
        dt: 1.0 / settings.segments as f64,
        n,
        width: (1usize << (2 * n)) - 1,
        dim: split.dim(),
    };

    let feasible = feasible_path(&target, split, settings.segments)?;
    let feasible_cost = path_cost(&feasible, metric)?;
    let mut starts = vec![state_from_path(&ev, &feasible)?, state_from_path(&ev, &direct_path(&target, settings.segments)?)?];
    for w in warm {
        starts.push(state_from_path(&ev, w)?);
    }
    // Best exactly-feasible state seen so far.
    let mut best = starts
        .iter()
        .filter(|s| s.residual <= RESIDUAL_TOL)
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .cloned()
        .ok_or_else(|| CartanError::InternalConsistency("no warm start reaches the target".into()))?;
    let origin = best.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let budget = settings.evals_per_variable * origin.x.len();
    // Smallest pre-repair residual among runs that missed the repair radius.
    let mut missed: Option<f64> = None;
    let mut converged_runs = 0;
    for restart in 0..=settings.restarts {
        let mut s = if restart == 0 {
            origin.clone()
        } else {
            let jitter = 0.05 * (1.0 + origin.x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            let x = origin.x.iter().map(|v| v + jitter * rng.gen_range(-1.0..1.0)).collect();
            ev.state(x)?
        };
        for &lambda in &PENALTY_SCHEDULE {
            s = pattern_search(&ev, s, lambda, budget, settings.min_step, &mut rng)?;
            if s.residual <= RESIDUAL_TOL {
                break;
            }
        }
        if s.residual > REPAIR_RADIUS {
            missed = Some(missed.map_or(s.residual, |m: f64| m.min(s.residual)));
            continue;
        }
        converged_runs += 1;
        let repaired = repair_endpoint(&ev, &s)?;
        if repaired.residual <= 1e-9 && repaired.cost < best.cost {
            best = repaired;
        }
    }
    if converged_runs == 0 {
        return Err(CartanError::NonConvergence { best_residual: missed.unwrap_or(f64::INFINITY) });
    }
    Ok(OptimizeOutcome {
        path: path_from_state(&ev, &best)?,
        cost: best.cost,
        endpoint_residual: best.residual,
        feasible_cost,
    })
}

pub fn optimize_path(
    target: &ComplexMatrix,
    metric: &PenaltyMetric,
    segments: usize,
    restarts: usize,
    seed: u64,
) -> Result<(ControlPath, f64)> {
    let out = optimize_path_with(target, metric, &OptimizerSettings::new(segments, restarts, seed), &[])?;
    Ok((out.path, out.cost))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub numeric_cost: f64,
    pub endpoint_residual: f64,
    pub feasible_cost: f64,
    pub relative_error: f64,
    pub upper_bound_ok: bool,
    pub lower_bound_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub analytic_cost: f64,
    pub epsilon_values: Vec<f64>,
    pub numeric_costs: Vec<f64>,
    pub endpoint_residuals: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// `(ε, message)` for every ε whose optimization failed.
    pub failures: Vec<(f64, String)>,
}

impl SweepResult {
    pub fn relative_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.relative_error).collect()
    }
}

/// Optimize at each ε in turn (descending), warm-starting every run from
/// the previous optimum. Failures are recorded and the sweep continues.
pub fn epsilon_sweep(target: &ComplexMatrix, split: &CartanSplit, epsilons: &[f64], settings: &OptimizerSettings) -> Result<SweepResult> {
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CartanError::Precondition("epsilon values must be strictly descending".into()));
    }
    let analytic = optimal_cost(target, split)?.cost;
    let mut result = SweepResult {
        analytic_cost: analytic,
        epsilon_values: Vec::new(),
        numeric_costs: Vec::new(),
        endpoint_residuals: Vec::new(),
        rows: Vec::new(),
        failures: Vec::new(),
    };
    let mut previous: Vec<ControlPath> = Vec::new();
    for (i, &eps) in epsilons.iter().enumerate() {
        let metric = PenaltyMetric::new(split.clone(), eps)?;
        let mut run = settings.clone();
        run.seed = settings.seed.wrapping_add(i as u64);
        match optimize_path_with(target, &metric, &run, &previous) {
            Ok(out) => {
                let relative_error = if analytic > 0.0 { (out.cost - analytic).abs() / analytic } else { out.cost };
                result.epsilon_values.push(eps);
                result.numeric_costs.push(out.cost);
                result.endpoint_residuals.push(out.endpoint_residual);
                result.rows.push(SweepRow {
                    epsilon: eps,
                    numeric_cost: out.cost,
                    endpoint_residual: out.endpoint_residual,
                    feasible_cost: out.feasible_cost,
                    relative_error,
                    upper_bound_ok: out.cost <= out.feasible_cost + 1e-9,
                    lower_bound_ok: out.cost >= analytic - LOWER_BOUND_SLACK,
                });
                previous = vec![out.path];
            }
            Err(e) => result.failures.push((eps, e.to_string())),
        }
    }
    Ok(result)
}
