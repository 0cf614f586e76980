//! Optimal synthesis cost: eigenphases of `Z` reduced against the lattice
//! `𝓛 = π·{m ∈ ℤᴺ : Σm = 0}`.

use std::f64::consts::{PI, SQRT_2};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CartanError, Result};
use crate::kak::{eigenphases, kak_decompose, reconstruct, EigenphaseVector, KakFactors};
use crate::matrix::{expm, frobenius_distance, log_special_orthogonal, ComplexMatrix, C64};
use crate::pauli::{i_times, CartanSplit, HamiltonianVector, Subspace};

/// Reported in every cost JSON: costs are `√tr(Z²)` with unnormalized Paulis.
pub const COST_CONVENTION: &str = "trace-norm-pauli";

/// Tolerance on `Σx` for lattice queries.
const SUM_ZERO_TOL: f64 = 1e-9;

/// The scaled root lattice `π·A_{N−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumZeroLattice {
    pub dim: usize,
}

impl SumZeroLattice {
    pub const SCALE: f64 = PI;

    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn point(&self, m: &[i64]) -> Vec<f64> {
        m.iter().map(|&k| k as f64 * Self::SCALE).collect()
    }

    pub fn contains(&self, m: &[i64]) -> bool {
        m.len() == self.dim && m.iter().sum::<i64>() == 0
    }

    /// `|x − π·m|`.
    pub fn distance(&self, x: &[f64], m: &[i64]) -> f64 {
        x.iter().zip(m).map(|(a, &k)| (a - Self::SCALE * k as f64).powi(2)).sum::<f64>().sqrt()
    }
}

fn check_sum_zero(x: &[f64]) -> Result<()> {
    let s: f64 = x.iter().sum();
    if x.is_empty() || s.abs() > SUM_ZERO_TOL {
        return Err(CartanError::Precondition(format!("lattice query needs Σx = 0, got {s:e}")));
    }
    Ok(())
}

/// Nearest integer, with exact halves rounded toward zero.
fn round_half_toward_zero(r: f64) -> f64 {
    let t = r.trunc();
    if (r - t).abs() == 0.5 {
        t
    } else {
        r.round()
    }
}

/// Nearest point of the sum-zero lattice to `x`.
///
/// Round each `x_k/π`, then repair the deficiency `Δ = Σm` by moving the
/// `|Δ|` coordinates whose rounding was most lopsided in the right
/// direction. Ties go to the lowest index.
pub fn closest_lattice_point(x: &[f64]) -> Result<Vec<i64>> {
    check_sum_zero(x)?;
    let r: Vec<f64> = x.iter().map(|v| v / PI).collect();
    let mut m: Vec<i64> = r.iter().map(|&v| round_half_toward_zero(v) as i64).collect();
    let residual: Vec<f64> = r.iter().zip(&m).map(|(v, &k)| v - k as f64).collect();
    let delta: i64 = m.iter().sum();
    let mut order: Vec<usize> = (0..x.len()).collect();
    if delta > 0 {
        order.sort_by(|&a, &b| residual[a].total_cmp(&residual[b]).then(a.cmp(&b)));
        for &k in order.iter().take(delta as usize) {
            m[k] -= 1;
        }
    } else if delta < 0 {
        order.sort_by(|&a, &b| residual[b].total_cmp(&residual[a]).then(a.cmp(&b)));
        for &k in order.iter().take((-delta) as usize) {
            m[k] += 1;
        }
    }
    Ok(m)
}

/// Exhaustive minimizer over `m ∈ {−radius..radius}ᴺ` with `Σm = 0`.
///
/// Depth-first search with two prunes: the partial distance plus the best
/// possible remainder must not exceed the incumbent, and the remaining
/// coordinates must still be able to cancel the partial sum. Among equal
/// distances the lexicographically smallest `m` wins.
pub fn closest_lattice_point_bruteforce(x: &[f64], radius: i64) -> Vec<i64> {
    let n = x.len();
    let r: Vec<f64> = x.iter().map(|v| v / PI).collect();
    // Lower bound on what coordinates k.. can contribute, ignoring the sum constraint.
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let nearest = r[k].round().clamp(-radius as f64, radius as f64);
        tail[k] = tail[k + 1] + (r[k] - nearest).powi(2);
    }

    struct Search<'a> {
        r: &'a [f64],
        tail: &'a [f64],
        radius: i64,
        current: Vec<i64>,
        best: Vec<i64>,
        best_d: f64,
    }

    impl Search<'_> {
        fn visit(&mut self, k: usize, partial_d: f64, partial_sum: i64) {
            const TIE: f64 = 1e-12;
            let n = self.r.len();
            if partial_d + self.tail[k] > self.best_d + TIE {
                return;
            }
            let remaining = (n - k) as i64;
            if partial_sum.abs() > remaining * self.radius {
                return;
            }
            if k == n {
                if partial_sum != 0 {
                    return;
                }
                let better = partial_d < self.best_d - TIE
                    || (partial_d <= self.best_d + TIE && self.current < self.best);
                if better || self.best.is_empty() {
                    self.best_d = self.best_d.min(partial_d);
                    self.best = self.current.clone();
                }
                return;
            }
            for m in -self.radius..=self.radius {
                self.current[k] = m;
                let d = partial_d + (self.r[k] - m as f64).powi(2);
                self.visit(k + 1, d, partial_sum + m);
            }
        }
    }

    let mut search = Search { r: &r, tail: &tail, radius, current: vec![0; n], best: Vec::new(), best_d: f64::INFINITY };
    search.visit(0, 0.0, 0);
    search.best
}

#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub cost: f64,
    /// Canonical eigenphases of `Z`, descending.
    pub eigenphases: EigenphaseVector,
    /// Minimizing `m`, aligned with `eigenphases`.
    pub lattice_point: Vec<i64>,
    /// `x − π·m`, aligned with `eigenphases`; its norm is the cost.
    pub shifted_phases: Vec<f64>,
    pub convention: &'static str,
    /// Factors re-expressed with the cost-optimal `Z`; `|Z| = cost`.
    pub factors: KakFactors,
}

/// Replace `Z` by the shifted `Z − π·(Q·diag(m)·Q†)` and absorb the signs
/// `S = diag((−1)^m)` into `B`, so `A·D·Bᵀ = A·(DS)·(BS)ᵀ` is unchanged.
fn shift_factors(f: &KakFactors, split: &CartanSplit, m_in_d_order: &[i64]) -> Result<KakFactors> {
    let shifted: Vec<f64> = f.phases.iter().zip(m_in_d_order).map(|(x, &k)| x - PI * k as f64).collect();
    let mut b = f.b.clone();
    for (c, &k) in m_in_d_order.iter().enumerate() {
        if k.rem_euclid(2) == 1 {
            for r in 0..b.dim() {
                b[(r, c)] = -b[(r, c)];
            }
        }
    }
    let mx = log_special_orthogonal(&b.transpose())?;
    let m = HamiltonianVector::from_dense(&split.from_adapted(&mx.scale(C64::new(0.0, -1.0))))?;
    let z = HamiltonianVector::from_dense(&split.from_adapted(&ComplexMatrix::from_real_diag(&shifted)))?;
    Ok(KakFactors {
        split: f.split.clone(),
        l: f.l.clone(),
        z: split.project(&z, Subspace::Z)?,
        m: split.project(&m, Subspace::L)?,
        a: f.a.clone(),
        d: ComplexMatrix::from_phases(&shifted),
        b,
        phases: shifted,
        global_phase: f.global_phase,
    })
}

/// Analytic optimal cost `min_{y ∈ 𝓛} |eig(Z) − y|` of synthesizing `U`.
pub fn optimal_cost(u: &ComplexMatrix, split: &CartanSplit) -> Result<CostReport> {
    let f = kak_decompose(u, split)?;
    cost_from_factors(&f, split)
}

pub fn cost_from_factors(f: &KakFactors, split: &CartanSplit) -> Result<CostReport> {
    let x = eigenphases(f);
    let m = closest_lattice_point(&x.phases)?;
    let shifted: Vec<f64> = x.phases.iter().zip(&m).map(|(v, &k)| v - PI * k as f64).collect();
    let cost = shifted.iter().map(|v| v * v).sum::<f64>().sqrt();

    // Map m back from sorted order to D's diagonal order.
    let mut order: Vec<usize> = (0..f.phases.len()).collect();
    order.sort_by(|&a, &b| f.phases[b].total_cmp(&f.phases[a]));
    let mut m_d = vec![0i64; m.len()];
    for (sorted_pos, &k) in order.iter().enumerate() {
        m_d[k] = m[sorted_pos];
    }
    let factors = shift_factors(f, split, &m_d)?;
    Ok(CostReport { cost, eigenphases: x, lattice_point: m, shifted_phases: shifted, convention: COST_CONVENTION, factors })
}

/// Closed form for one qubit with `U = e^{−ixσx}·e^{−izS_z}·e^{−iyσx}`, where
/// the middle generator has eigenvalues `±z/2`: `(1/√2)·min_m |z − 2mπ|`.
/// The outer angles are free moves and do not enter.
pub fn single_qubit_cost(_x: f64, z: f64, _y: f64) -> f64 {
    let reduced = z - 2.0 * PI * (z / (2.0 * PI)).round();
    reduced.abs() / SQRT_2
}

/// The same single-qubit quantity when `σz` is read as the standard Pauli
/// (eigenvalues `±z`): `√2·min_m |z − mπ|`.
pub fn single_qubit_cost_standard_pauli(z: f64) -> f64 {
    let reduced = z - PI * (z / PI).round();
    SQRT_2 * reduced.abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub base_cost: f64,
    pub samples: usize,
    pub max_deviation: f64,
    pub passed: bool,
    pub violations: Vec<String>,
}

/// Dress `U` with random free moves `e^{iK₁}·U·e^{iK₂}`, `K₁, K₂ ∈ 𝔩`, and
/// confirm the cost is unchanged within 1e−8.
pub fn cheap_invariance_check(u: &ComplexMatrix, split: &CartanSplit, samples: usize, seed: u64) -> Result<InvarianceReport> {
    const TOL: f64 = 1e-8;
    let base_cost = optimal_cost(u, split)?.cost;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InvarianceReport { base_cost, samples, max_deviation: 0.0, passed: true, violations: Vec::new() };
    for s in 0..samples {
        let k1 = split.random_element(Subspace::L, 1.5, &mut rng);
        let k2 = split.random_element(Subspace::L, 1.5, &mut rng);
        let dressed = &(&expm(&i_times(&k1))? * u) * &expm(&i_times(&k2))?;
        let c = optimal_cost(&dressed, split)?.cost;
        let dev = (c - base_cost).abs();
        report.max_deviation = report.max_deviation.max(dev);
        if dev > TOL {
            report.violations.push(format!("sample {s}: cost {c} vs {base_cost} (deviation {dev:e})"));
        }
    }
    report.passed = report.violations.is_empty();
    Ok(report)
}

/// Reconstruction residual of a report's optimal factors against `U`.
pub fn optimal_factors_residual(report: &CostReport, u: &ComplexMatrix) -> Result<f64> {
    frobenius_distance(&reconstruct(&report.factors)?, u, true)
}
