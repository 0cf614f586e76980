//! Cartan decomposition `U = e^{iL}·e^{iZ}·e^{iM}` with `L, M ∈ 𝔩` and `Z ∈ 𝔷`.
//!
//! The work happens in the adapted frame `V = Q†UQ`, where the factors
//! become `V = A·D·Bᵀ` with `A, B` real special orthogonal and `D` diagonal.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{CartanError, Result};
use crate::matrix::{diag_symmetric_unitary, expm, log_special_orthogonal, ComplexMatrix, C64};
use crate::pauli::{i_times, CartanSplit, HamiltonianVector, Subspace};

/// Tolerance for coefficients of `L, M, Z` leaking outside their subspace.
const MEMBERSHIP_TOL: f64 = 1e-9;
/// Tolerance for `A` to be real orthogonal.
const FRAME_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct KakFactors {
    pub split: String,
    #[serde(rename = "L")]
    pub l: HamiltonianVector,
    #[serde(rename = "Z")]
    pub z: HamiltonianVector,
    #[serde(rename = "M")]
    pub m: HamiltonianVector,
    #[serde(rename = "A")]
    pub a: ComplexMatrix,
    #[serde(rename = "D")]
    pub d: ComplexMatrix,
    #[serde(rename = "B")]
    pub b: ComplexMatrix,
    /// Arguments of the diagonal of `D`, in the same order, summing to 0.
    pub phases: Vec<f64>,
    /// `θ` with `U_input = e^{iθ}·U`, where `U` is the decomposed SU element.
    pub global_phase: f64,
}

/// Sum-zero eigenphases of `Z`, sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EigenphaseVector {
    pub phases: Vec<f64>,
}

impl EigenphaseVector {
    /// Sorts descending and removes the roundoff residue of the sum.
    pub fn new(mut phases: Vec<f64>) -> Self {
        let mean = phases.iter().sum::<f64>() / phases.len() as f64;
        for x in &mut phases {
            *x -= mean;
        }
        phases.sort_by(|a, b| b.total_cmp(a));
        Self { phases }
    }

    pub fn norm(&self) -> f64 {
        self.phases.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Divide out the principal `N`-th root of `det U`.
///
/// Returns the special unitary and the removed phase `θ` (`U = e^{iθ}·U_s`).
pub fn project_to_special(u: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    if !u.is_unitary(1e-9) {
        return Err(CartanError::Precondition(format!(
            "input is not unitary (residual {:e})",
            u.unitarity_residual()
        )));
    }
    let theta = u.det().arg() / u.dim() as f64;
    Ok((u.scale(C64::from_polar(1.0, -theta)), theta))
}

/// Square root of the diagonal `E` with `det D = 1`, plus the phases of `D`
/// chosen to sum to exactly zero (modulo roundoff).
fn sqrt_with_unit_det(e: &[C64]) -> Vec<f64> {
    let mut x: Vec<f64> = e.iter().map(|z| z.arg() / 2.0).collect();
    let total: f64 = x.iter().sum();
    // det D = ±1 since det E = 1. For −1, flip the entry nearest −π by adding π.
    if (total / PI).round().rem_euclid(2.0) != 0.0 {
        let k = (0..x.len()).min_by(|&a, &b| x[a].total_cmp(&x[b])).expect("non-empty");
        x[k] += PI;
    }
    // Now Σx ∈ 2πℤ. Move whole turns off the largest (or onto the smallest)
    // entries until the sum vanishes; D is unchanged.
    let turns = (x.iter().sum::<f64>() / (2.0 * PI)).round() as i64;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    if turns > 0 {
        for &k in order.iter().take(turns as usize) {
            x[k] -= 2.0 * PI;
        }
    } else if turns < 0 {
        for &k in order.iter().rev().take((-turns) as usize) {
            x[k] += 2.0 * PI;
        }
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// Hermitian `−i·Q·X·Q†` for a real antisymmetric `X`, as Pauli coefficients.
fn generator_from_adapted(split: &CartanSplit, x: &ComplexMatrix) -> Result<HamiltonianVector> {
    let h = split.from_adapted(&x.scale(C64::new(0.0, -1.0)));
    HamiltonianVector::from_dense(&h)
}

fn check_membership(split: &CartanSplit, h: &HamiltonianVector, which: Subspace, label: &str) -> Result<()> {
    let outside = split.distance_outside(h, which);
    if outside > MEMBERSHIP_TOL {
        return Err(CartanError::InternalConsistency(format!(
            "{label} leaves its subspace (coefficient {outside:e} outside)"
        )));
    }
    Ok(())
}

/// Decompose a unitary. Non-special inputs are first projected into SU(N)
/// via [`project_to_special`]; the removed phase is kept in the result.
pub fn kak_decompose(u: &ComplexMatrix, split: &CartanSplit) -> Result<KakFactors> {
    if u.dim() != split.dim() {
        return Err(CartanError::DimensionMismatch { left: split.dim(), right: u.dim() });
    }
    let (u, global_phase) = project_to_special(u)?;
    let v = split.to_adapted(&u);
    let msym = &v.transpose() * &v;
    let (o, e) = diag_symmetric_unitary(&msym)?;

    let phases = sqrt_with_unit_det(&e.diagonal());
    let d = ComplexMatrix::from_phases(&phases);
    let d_inv = ComplexMatrix::from_phases(&phases.iter().map(|x| -x).collect::<Vec<_>>());
    let a_full = &(&v * &o) * &d_inv;

    let imag = a_full.imag_part().max_abs();
    let a = a_full.real_part();
    let ortho = (&(&a.transpose() * &a) - &ComplexMatrix::identity(a.dim())).max_abs();
    if imag > FRAME_TOL || ortho > FRAME_TOL {
        return Err(CartanError::NumericalFailure { stage: "left factor A not real orthogonal".into(), residual: imag.max(ortho) });
    }
    let det_a = a.det().re;
    if (det_a - 1.0).abs() > FRAME_TOL {
        return Err(CartanError::NumericalFailure { stage: "left factor A not in SO(N)".into(), residual: (det_a - 1.0).abs() });
    }

    let l = generator_from_adapted(split, &log_special_orthogonal(&a)?)?;
    let m = generator_from_adapted(split, &log_special_orthogonal(&o.transpose())?)?;
    let z = HamiltonianVector::from_dense(&split.from_adapted(&ComplexMatrix::from_real_diag(&phases)))?;
    check_membership(split, &l, Subspace::L, "L")?;
    check_membership(split, &m, Subspace::L, "M")?;
    check_membership(split, &z, Subspace::Z, "Z")?;

    Ok(KakFactors {
        split: split.name().to_string(),
        l: split.project(&l, Subspace::L)?,
        z: split.project(&z, Subspace::Z)?,
        m: split.project(&m, Subspace::L)?,
        a,
        d,
        b: o,
        phases,
        global_phase,
    })
}

/// `e^{iL}·e^{iZ}·e^{iM}`.
pub fn reconstruct(f: &KakFactors) -> Result<ComplexMatrix> {
    compose(&f.l, &f.z, &f.m)
}

pub fn compose(l: &HamiltonianVector, z: &HamiltonianVector, m: &HamiltonianVector) -> Result<ComplexMatrix> {
    Ok(&(&expm(&i_times(l))? * &expm(&i_times(z))?) * &expm(&i_times(m))?)
}

pub fn eigenphases(f: &KakFactors) -> EigenphaseVector {
    EigenphaseVector::new(f.phases.clone())
}
