use std::f64::consts::PI;

use super::eigen::{eig_unitary, jacobi_real_projector_basis};
use super::{eig_hermitian, ComplexMatrix, C64, I};
use crate::error::{CartanError, Result};

/// Eigenvalues of an orthogonal matrix closer than this to −1 are handled
/// by explicit plane pairing rather than the principal logarithm.
const MINUS_ONE_WINDOW: f64 = 1e-9;

/// `e^X` for anti-Hermitian `X`, via the eigendecomposition of the Hermitian `iX`.
pub fn expm(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let tol = 1e-10 * x.max_abs().max(1.0);
    if !x.is_antihermitian(tol) {
        return Err(CartanError::Precondition(format!(
            "expm: input not anti-Hermitian (residual {:e})",
            (x + &x.adjoint()).max_abs()
        )));
    }
    let h = x.scale(I);
    let eig = eig_hermitian(&h)?;
    let phases: Vec<f64> = eig.values.iter().map(|&l| -l).collect();
    Ok(&(&eig.vectors * &ComplexMatrix::from_phases(&phases)) * &eig.vectors.adjoint())
}

/// Principal logarithm of a unitary: anti-Hermitian `X` with `e^X = U` and
/// eigenvalues `iθ`, θ in (−π, π].
pub fn logm_unitary(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (phases, v) = eig_unitary(u)?;
    let diag: Vec<C64> = phases.iter().map(|&t| I * t).collect();
    let x = &(&v * &ComplexMatrix::from_diag(&diag)) * &v.adjoint();
    Ok((&x - &x.adjoint()).scale_real(0.5))
}

/// Real antisymmetric logarithm of a rotation, planar angles in (−π, π].
///
/// The −1 eigenspace (always even-dimensional in SO(N)) is split into
/// explicit orthonormal planes, each given the angle π.
pub fn log_special_orthogonal(o: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !o.is_real(1e-8) {
        return Err(CartanError::Precondition("log_special_orthogonal: input not real".into()));
    }
    let o = o.real_part();
    if !o.is_unitary(1e-8) {
        return Err(CartanError::Precondition(format!(
            "log_special_orthogonal: input not orthogonal (residual {:e})",
            o.unitarity_residual()
        )));
    }
    if (o.det().re - 1.0).abs() > 1e-8 {
        return Err(CartanError::Precondition("log_special_orthogonal: det must be +1".into()));
    }
    let n = o.dim();
    let (phases, v) = eig_unitary(&o)?;

    let mut x = ComplexMatrix::zeros(n);
    let mut flip = ComplexMatrix::zeros(n);
    let mut flip_count = 0;
    for (k, &theta) in phases.iter().enumerate() {
        let col = v.column(k);
        let (target, w) = if theta.abs() > PI - MINUS_ONE_WINDOW {
            flip_count += 1;
            (&mut flip, C64::new(1.0, 0.0))
        } else {
            (&mut x, I * theta)
        };
        for r in 0..n {
            for c in 0..n {
                target[(r, c)] += w * col[r] * col[c].conj();
            }
        }
    }
    let mut x = x.real_part();

    if flip_count > 0 {
        let planes = jacobi_real_projector_basis(&flip.real_part());
        if !planes.len().is_multiple_of(2) {
            return Err(CartanError::NumericalFailure {
                stage: "pairing −1 eigenvectors".into(),
                residual: planes.len() as f64,
            });
        }
        for pair in planes.chunks(2) {
            let (a, b) = (&pair[0], &pair[1]);
            for r in 0..n {
                for c in 0..n {
                    x[(r, c)] += C64::new(PI * (b[r] * a[c] - a[r] * b[c]), 0.0);
                }
            }
        }
    }
    Ok((&x - &x.transpose()).scale_real(0.5))
}

/// `‖U − V‖_F`, or `min_φ ‖U − e^{iφ}V‖_F` when `mod_global_phase` is set.
pub fn frobenius_distance(u: &ComplexMatrix, v: &ComplexMatrix, mod_global_phase: bool) -> Result<f64> {
    u.check_same_dim(v)?;
    if !mod_global_phase {
        return Ok((u - v).frobenius_norm());
    }
    // Optimal phase aligns V with U: e^{iφ} = tr(V†U)/|tr(V†U)|.
    let overlap = (&v.adjoint() * u).trace();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    Ok((u - &v.scale(phase)).frobenius_norm())
}
