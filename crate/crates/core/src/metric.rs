//! The penalty metric `𝒢̃ = ε·P_𝔩 + P_𝔭` and the coordinate Gram matrix it
//! induces on `(L, Z, M) ↦ e^{iL}·e^{iZ}·e^{iM}`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{CartanError, Result};
use crate::kak::compose;
use crate::matrix::{eig_hermitian, expm, ComplexMatrix, C64};
use crate::pauli::{i_times, trace_inner_product, CartanSplit, HamiltonianVector, PauliString, Subspace};

/// Largest `√tr(L²)` accepted by [`bch_operator`].
pub const BCH_NORM_GUARD: f64 = 2.0;
pub const DEFAULT_BCH_TERMS: usize = 30;
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Largest tolerated gap between the `h` and `2h` Gram estimates.
const RICHARDSON_TOL: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct PenaltyMetric {
    split: CartanSplit,
    epsilon: f64,
}

impl PenaltyMetric {
    pub fn new(split: CartanSplit, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(CartanError::Precondition(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        Ok(Self { split, epsilon })
    }

    pub fn split(&self) -> &CartanSplit {
        &self.split
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.split.clone(), epsilon)
    }

    /// `⟨A, 𝒢̃B⟩ = ε⟨P_𝔩A, P_𝔩B⟩ + ⟨P_𝔭A, P_𝔭B⟩`.
    pub fn inner(&self, a: &HamiltonianVector, b: &HamiltonianVector) -> f64 {
        let scale = (1usize << a.qubits()) as f64;
        let in_l = |i: usize| self.split.contains(Subspace::L, &PauliString::from_code(a.qubits(), i + 1));
        let mut l_part = 0.0;
        let mut p_part = 0.0;
        for (i, (x, y)) in a.coeffs().iter().zip(b.coeffs()).enumerate() {
            if *x == 0.0 || *y == 0.0 {
                continue;
            }
            if in_l(i) {
                l_part += x * y;
            } else if self.split.contains(Subspace::P, &PauliString::from_code(a.qubits(), i + 1)) {
                p_part += x * y;
            }
        }
        scale * (self.epsilon * l_part + p_part)
    }
}

/// `C(H) = √⟨H, 𝒢̃H⟩`.
pub fn hamiltonian_cost(h: &HamiltonianVector, metric: &PenaltyMetric) -> Result<f64> {
    let split = metric.split();
    let l = split.project(h, Subspace::L)?;
    let p = split.project(h, Subspace::P)?;
    Ok((metric.epsilon * trace_inner_product(&l, &l) + trace_inner_product(&p, &p)).sqrt())
}

/// `BCH_L(P) = φ(ad_{iL})(P)` with `φ(w) = (e^w − 1)/w`, truncated after
/// `terms` terms, so that `e^{i(L+ΔP)} = e^{iΔ·BCH_L(P)}·e^{iL} + O(Δ²)`.
pub fn bch_operator(l: &HamiltonianVector, p: &HamiltonianVector, terms: usize) -> Result<HamiltonianVector> {
    if terms == 0 {
        return Err(CartanError::Precondition("bch_operator needs at least one term".into()));
    }
    if l.qubits() != p.qubits() {
        return Err(CartanError::DimensionMismatch { left: l.qubits(), right: p.qubits() });
    }
    let norm = l.norm();
    if norm > BCH_NORM_GUARD {
        return Err(CartanError::Precondition(format!(
            "bch_operator series guard: |L| = {norm:.6} exceeds {BCH_NORM_GUARD}"
        )));
    }
    HamiltonianVector::from_dense(&bch_dense(&l.dense(), &p.dense(), terms))
}

fn bch_dense(l: &ComplexMatrix, p: &ComplexMatrix, terms: usize) -> ComplexMatrix {
    let il = l.scale(C64::new(0.0, 1.0));
    let mut term = p.clone();
    let mut acc = p.clone();
    for k in 1..terms {
        term = il.commutator(&term).scale_real(1.0 / (k + 1) as f64);
        acc = &acc + &term;
    }
    (&acc + &acc.adjoint()).scale_real(0.5)
}

fn adjoint_action(u: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    &(u * x) * &u.adjoint()
}

/// Orthonormal coordinate directions `P/√2ⁿ` over `(𝔩, 𝔷, 𝔩)`.
fn coordinate_directions(split: &CartanSplit) -> [Vec<HamiltonianVector>; 3] {
    let norm = 1.0 / (split.dim() as f64).sqrt();
    let dirs = |basis: &[PauliString]| {
        basis
            .iter()
            .map(|s| {
                let mut h = HamiltonianVector::zeros(split.qubits());
                h.set(s, norm);
                h
            })
            .collect::<Vec<_>>()
    };
    [dirs(split.l_basis()), dirs(split.z_basis()), dirs(split.l_basis())]
}

/// A base point `(L, Z, M)` of the coordinate chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasePoint {
    #[serde(rename = "L")]
    pub l: HamiltonianVector,
    #[serde(rename = "Z")]
    pub z: HamiltonianVector,
    #[serde(rename = "M")]
    pub m: HamiltonianVector,
}

impl BasePoint {
    pub fn origin(n: usize) -> Self {
        Self { l: HamiltonianVector::zeros(n), z: HamiltonianVector::zeros(n), m: HamiltonianVector::zeros(n) }
    }

    fn coordinate(&self, block: usize) -> &HamiltonianVector {
        match block {
            0 => &self.l,
            1 => &self.z,
            _ => &self.m,
        }
    }

    fn shifted(&self, block: usize, dir: &HamiltonianVector, step: f64) -> Self {
        let mut out = self.clone();
        let moved = self.coordinate(block) + &dir.scale(step);
        match block {
            0 => out.l = moved,
            1 => out.z = moved,
            _ => out.m = moved,
        }
        out
    }

    fn unitary(&self) -> Result<ComplexMatrix> {
        compose(&self.l, &self.z, &self.m)
    }
}

/// Gram matrix of the pulled-back metric in `(𝔩, 𝔷, 𝔩)` coordinates.
#[derive(Debug, Clone)]
pub struct CoordinateGram {
    pub base: BasePoint,
    pub epsilon: f64,
    /// Block sizes `(|𝔩|, |𝔷|, |𝔩|)`.
    pub sizes: [usize; 3],
    pub matrix: Vec<Vec<f64>>,
    pub fd_step: f64,
    /// Largest entry gap between the `h` and `2h` estimates; zero for an
    /// analytic Gram.
    pub richardson_residual: f64,
}

impl CoordinateGram {
    fn offset(&self, block: usize) -> usize {
        self.sizes[..block].iter().sum()
    }

    /// Block `(i, j)`, zero-based over `(𝔩, 𝔷, 𝔩)`.
    pub fn block(&self, i: usize, j: usize) -> Vec<Vec<f64>> {
        let (ri, cj) = (self.offset(i), self.offset(j));
        (0..self.sizes[i]).map(|r| self.matrix[ri + r][cj..cj + self.sizes[j]].to_vec()).collect()
    }

    pub fn symmetry_residual(&self) -> f64 {
        let n = self.matrix.len();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max((self.matrix[r][c] - self.matrix[c][r]).abs());
            }
        }
        worst
    }
}

#[derive(Serialize)]
struct GramJson<'a> {
    base: &'a BasePoint,
    epsilon: f64,
    fd_step: f64,
    sizes: [usize; 3],
    blocks: BTreeMap<String, Vec<Vec<f64>>>,
    symmetry_residual: f64,
    richardson_residual: f64,
}

impl Serialize for CoordinateGram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut blocks = BTreeMap::new();
        for i in 0..3 {
            for j in 0..3 {
                blocks.insert(format!("G{}{}", i + 1, j + 1), self.block(i, j));
            }
        }
        GramJson {
            base: &self.base,
            epsilon: self.epsilon,
            fd_step: self.fd_step,
            sizes: self.sizes,
            blocks,
            symmetry_residual: self.symmetry_residual(),
            richardson_residual: self.richardson_residual,
        }
        .serialize(s)
    }
}

fn gram_of(tangents: &[HamiltonianVector], metric: &PenaltyMetric) -> Vec<Vec<f64>> {
    let n = tangents.len();
    let mut g = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in r..n {
            let v = metric.inner(&tangents[r], &tangents[c]);
            g[r][c] = v;
            g[c][r] = v;
        }
    }
    g
}

/// Right-trivialized tangents `H_j = i·(∂U/∂q_j)·U†` by central differences.
fn fd_tangents(base: &BasePoint, dirs: &[Vec<HamiltonianVector>; 3], h: f64) -> Result<Vec<HamiltonianVector>> {
    let u_adj = base.unitary()?.adjoint();
    let mut out = Vec::new();
    for (block, list) in dirs.iter().enumerate() {
        for d in list {
            let plus = base.shifted(block, d, h).unitary()?;
            let minus = base.shifted(block, d, -h).unitary()?;
            let du = (&plus - &minus).scale_real(1.0 / (2.0 * h));
            let t = (&du * &u_adj).scale(C64::new(0.0, 1.0));
            out.push(HamiltonianVector::from_dense(&(&t + &t.adjoint()).scale_real(0.5))?);
        }
    }
    Ok(out)
}

/// Finite-difference pullback of `𝒢̃` to the `(L, Z, M)` chart.
pub fn pullback_gram(base: &BasePoint, metric: &PenaltyMetric, fd_step: f64) -> Result<CoordinateGram> {
    if !(1e-6..=1e-3).contains(&fd_step) {
        return Err(CartanError::Precondition(format!("fd_step must lie in [1e-6, 1e-3], got {fd_step:e}")));
    }
    let split = metric.split();
    let dirs = coordinate_directions(split);
    let fine = gram_of(&fd_tangents(base, &dirs, fd_step)?, metric);
    let coarse = gram_of(&fd_tangents(base, &dirs, 2.0 * fd_step)?, metric);
    let gap = fine
        .iter()
        .flatten()
        .zip(coarse.iter().flatten())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if gap > RICHARDSON_TOL {
        return Err(CartanError::NumericalFailure { stage: "pullback Gram step-size check".into(), residual: gap });
    }
    Ok(CoordinateGram {
        base: base.clone(),
        epsilon: metric.epsilon(),
        sizes: [dirs[0].len(), dirs[1].len(), dirs[2].len()],
        matrix: fine,
        fd_step,
        richardson_residual: gap,
    })
}

/// The same Gram from closed-form tangents: `H_L = −BCH_L(B)`,
/// `H_Z = −Ad_{e^{iL}}B`, `H_M = −Ad_{e^{iL}e^{iZ}}BCH_M(B)`.
pub fn analytic_gram(base: &BasePoint, metric: &PenaltyMetric, terms: usize) -> Result<CoordinateGram> {
    let split = metric.split();
    let dirs = coordinate_directions(split);
    let el = expm(&i_times(&base.l))?;
    let elz = &el * &expm(&i_times(&base.z))?;
    let mut tangents = Vec::new();
    for d in &dirs[0] {
        tangents.push(-&bch_operator(&base.l, d, terms)?);
    }
    for d in &dirs[1] {
        tangents.push(-&HamiltonianVector::from_dense(&adjoint_action(&el, &d.dense()))?);
    }
    for d in &dirs[2] {
        let b = bch_operator(&base.m, d, terms)?;
        tangents.push(-&HamiltonianVector::from_dense(&adjoint_action(&elz, &b.dense()))?);
    }
    Ok(CoordinateGram {
        base: base.clone(),
        epsilon: metric.epsilon(),
        sizes: [dirs[0].len(), dirs[1].len(), dirs[2].len()],
        matrix: gram_of(&tangents, metric),
        fd_step: 0.0,
        richardson_residual: 0.0,
    })
}

/// `ε·BCH†BCH` over the orthonormal 𝔩 directions at `X`.
fn bch_reference(x: &HamiltonianVector, metric: &PenaltyMetric) -> Result<Vec<Vec<f64>>> {
    let dirs = &coordinate_directions(metric.split())[0];
    let images = dirs.iter().map(|d| bch_operator(x, d, DEFAULT_BCH_TERMS)).collect::<Result<Vec<_>>>()?;
    let n = images.len();
    let mut g = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in 0..n {
            g[r][c] = metric.epsilon() * trace_inner_product(&images[r], &images[c]);
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy)]
pub struct GramTolerances {
    pub off_diagonal: f64,
    pub central: f64,
    pub g11_relative: f64,
    pub g33_relative: f64,
    pub psd: f64,
}

impl Default for GramTolerances {
    fn default() -> Self {
        Self { off_diagonal: 1e-4, central: 1e-5, g11_relative: 1e-4, g33_relative: 1e-4, psd: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GramStructureReport {
    pub max_g12: f64,
    pub max_g13: f64,
    pub max_g23: f64,
    pub block_diagonal_ok: bool,
    pub g22_residual: f64,
    pub g22_ok: bool,
    pub g11_relative_residual: f64,
    pub g11_ok: bool,
    /// Present only when `Z = 0`: relative gap of `G₃₃` from `ε·BCH_M†BCH_M`.
    pub g33_relative_residual: Option<f64>,
    pub g33_ok: bool,
    pub g33_min_eigenvalue: f64,
    pub g33_max_eigenvalue: f64,
    pub gram_min_eigenvalue: f64,
    pub psd_ok: bool,
    pub passed: bool,
}

fn max_abs(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()))
}

fn max_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn relative_gap(actual: &[Vec<f64>], reference: &[Vec<f64>]) -> f64 {
    max_gap(actual, reference) / max_abs(reference).max(f64::MIN_POSITIVE)
}

fn eigen_range(m: &[Vec<f64>]) -> Result<(f64, f64)> {
    if m.is_empty() {
        return Ok((0.0, 0.0));
    }
    let n = m.len();
    let cm = ComplexMatrix::from_fn(n, |r, c| C64::new(0.5 * (m[r][c] + m[c][r]), 0.0));
    let values = eig_hermitian(&cm)?.values;
    Ok((values[0], values[n - 1]))
}

/// Check the block structure claimed for the coordinate Gram.
///
/// (a) off-diagonal blocks `G₁₂, G₁₃, G₂₃` vanish; (b) `G₂₂ = I`;
/// (c) `G₁₁ = ε·BCH_L†BCH_L`; (d) at `Z = 0`, `G₃₃ = ε·BCH_M†BCH_M`
/// (`ε·I` when also `M = 0`), and `G₃₃` and `G` are positive semidefinite.
pub fn verify_gram_structure(gram: &CoordinateGram, metric: &PenaltyMetric, tol: GramTolerances) -> Result<GramStructureReport> {
    let max_g12 = max_abs(&gram.block(0, 1));
    let max_g13 = max_abs(&gram.block(0, 2));
    let max_g23 = max_abs(&gram.block(1, 2));
    let block_diagonal_ok = max_g12.max(max_g13).max(max_g23) <= tol.off_diagonal;

    let g22 = gram.block(1, 1);
    let nz = g22.len();
    let identity: Vec<Vec<f64>> = (0..nz).map(|r| (0..nz).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
    let g22_residual = max_gap(&g22, &identity);
    let g22_ok = g22_residual <= tol.central;

    let g11_relative_residual = relative_gap(&gram.block(0, 0), &bch_reference(&gram.base.l, metric)?);
    let g11_ok = g11_relative_residual <= tol.g11_relative;

    let g33 = gram.block(2, 2);
    let g33_relative_residual = if gram.base.z.norm() <= 1e-12 {
        Some(relative_gap(&g33, &bch_reference(&gram.base.m, metric)?))
    } else {
        None
    };
    let (g33_min_eigenvalue, g33_max_eigenvalue) = eigen_range(&g33)?;
    let (gram_min_eigenvalue, _) = eigen_range(&gram.matrix)?;
    let psd_ok = g33_min_eigenvalue >= -tol.psd && gram_min_eigenvalue >= -tol.psd;
    let g33_ok = g33_relative_residual.is_none_or(|r| r <= tol.g33_relative);

    let passed = block_diagonal_ok && g22_ok && g11_ok && g33_ok && psd_ok;
    Ok(GramStructureReport {
        max_g12,
        max_g13,
        max_g23,
        block_diagonal_ok,
        g22_residual,
        g22_ok,
        g11_relative_residual,
        g11_ok,
        g33_relative_residual,
        g33_ok,
        g33_min_eigenvalue,
        g33_max_eigenvalue,
        gram_min_eigenvalue,
        psd_ok,
        passed,
    })
}

/// `‖e^{i(L+ΔP)} − e^{iΔ·BCH_L(P)}·e^{iL}‖_F`.
pub fn bch_defect(l: &HamiltonianVector, p: &HamiltonianVector, delta: f64, terms: usize) -> Result<f64> {
    let exact = expm(&i_times(&(l + &p.scale(delta))))?;
    let b = bch_operator(l, p, terms)?;
    let approx = &expm(&i_times(&b.scale(delta)))? * &expm(&i_times(l))?;
    Ok((&exact - &approx).frobenius_norm())
}

/// Convergence order of [`bch_defect`] from one step halving.
pub fn bch_defect_slope(l: &HamiltonianVector, p: &HamiltonianVector, delta: f64) -> Result<f64> {
    let coarse = bch_defect(l, p, delta, DEFAULT_BCH_TERMS)?;
    let fine = bch_defect(l, p, delta / 2.0, DEFAULT_BCH_TERMS)?;
    Ok((coarse / fine).log2())
}

/// Random element of `𝔩` with norm uniform in `[0.1, 1]·max_norm`.
fn bounded_l_element(split: &CartanSplit, max_norm: f64, rng: &mut impl rand::Rng) -> HamiltonianVector {
    let h = split.random_element(Subspace::L, 1.0, rng);
    let norm = h.norm();
    let target = max_norm * rng.gen_range(0.1..1.0);
    if norm > 0.0 {
        h.scale(target / norm)
    } else {
        h
    }
}

/// Random base point with `|L|, |M| ≤ max_lm` and `Z` coefficients in `[−z_scale, z_scale]`.
pub fn random_base_point(split: &CartanSplit, max_lm: f64, z_scale: f64, rng: &mut impl rand::Rng) -> BasePoint {
    let l = bounded_l_element(split, max_lm, rng);
    let m = bounded_l_element(split, max_lm, rng);
    let z = split.random_element(Subspace::Z, z_scale, rng);
    BasePoint { l, z, m }
}
