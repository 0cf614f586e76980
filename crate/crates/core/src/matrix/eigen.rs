//! Cyclic Jacobi eigensolver and the commuting-pair machinery built on it.

use super::{ComplexMatrix, C64, I, ZERO};
use crate::error::{CartanError, Result};

/// Eigenvalues in ascending order with matching unitary eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

const MAX_SWEEPS: usize = 100;

/// Relative gap below which neighbouring eigenvalues of the combined
/// matrix are treated as one cluster and re-resolved.
const CLUSTER_GAP: f64 = 1e-5;

/// Mixing coefficients tried in turn for `a + c·b`.
const MIX_COEFFS: [f64; 6] = [
    0.618_033_988_749_894_8,
    std::f64::consts::SQRT_2,
    0.367_879_441_171_442_3,
    std::f64::consts::E,
    0.171_572_875_253_809_9,
    5.196_152_422_706_632,
];

pub fn eig_hermitian(h: &ComplexMatrix) -> Result<HermitianEigen> {
    let tol = 1e-10 * h.max_abs().max(1.0);
    if !h.is_hermitian(tol) {
        return Err(CartanError::Precondition(format!(
            "eig_hermitian: input not Hermitian (residual {:e})",
            (h - &h.adjoint()).max_abs()
        )));
    }
    Ok(jacobi(h))
}

fn jacobi(h: &ComplexMatrix) -> HermitianEigen {
    let n = h.dim();
    // Work on the exactly Hermitian part.
    let mut a = (h + &h.adjoint()).scale_real(0.5);
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b == 0.0 {
                    continue;
                }
                // For real input the phase is exactly ±1 and everything stays real.
                let phase = apq / b;
                let phase_conj = phase.conj();
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * phase_conj * s;
                    a[(k, q)] = akp * s + akq * phase_conj * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * phase_conj * s;
                    v[(k, q)] = vkp * s + vkq * phase_conj * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// Orthonormal real basis of the range of a real symmetric projector.
pub(super) fn jacobi_real_projector_basis(p: &ComplexMatrix) -> Vec<Vec<f64>> {
    let eig = jacobi(p);
    (0..p.dim())
        .filter(|&k| eig.values[k] > 0.5)
        .map(|k| eig.vectors.column(k).iter().map(|z| z.re).collect())
        .collect()
}

fn column_slice(v: &ComplexMatrix, cols: &[usize]) -> Vec<Vec<C64>> {
    cols.iter().map(|&c| v.column(c)).collect()
}

/// `W†·M·W` for a list of column vectors `W`.
fn restrict(m: &ComplexMatrix, cols: &[Vec<C64>]) -> ComplexMatrix {
    let n = m.dim();
    let images: Vec<Vec<C64>> = cols
        .iter()
        .map(|w| (0..n).map(|r| (0..n).map(|c| m[(r, c)] * w[c]).sum()).collect())
        .collect();
    ComplexMatrix::from_fn(cols.len(), |i, j| {
        cols[i].iter().zip(&images[j]).map(|(x, y)| x.conj() * y).sum()
    })
}

fn diagonalize_mixture(a: &ComplexMatrix, b: &ComplexMatrix, coeff_idx: usize, depth: usize) -> ComplexMatrix {
    let n = a.dim();
    let c = MIX_COEFFS[coeff_idx % MIX_COEFFS.len()];
    let s = a + &b.scale_real(c);
    let eig = jacobi(&s);
    let mut v = eig.vectors;
    if depth >= 4 || n == 1 {
        return v;
    }

    let scale = eig.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] <= CLUSTER_GAP * scale {
            end += 1;
        }
        if end - start > 1 {
            let idx: Vec<usize> = (start..end).collect();
            let cols = column_slice(&v, &idx);
            let a_c = restrict(a, &cols);
            let b_c = restrict(b, &cols);
            let w = diagonalize_mixture(&a_c, &b_c, coeff_idx + 1, depth + 1);
            for (j, &target) in idx.iter().enumerate() {
                for r in 0..n {
                    v[(r, target)] = (0..cols.len()).map(|i| cols[i][r] * w[(i, j)]).sum();
                }
            }
        }
        start = end;
    }
    v
}

/// Common eigenbasis of two commuting Hermitian matrices.
///
/// Diagonalizes `a + c·b` for a mixing coefficient `c`; clusters of nearly
/// equal eigenvalues are re-resolved by diagonalizing the restriction of the
/// pair to the cluster with a different coefficient. Several coefficients are
/// tried until both `V†aV` and `V†bV` are diagonal within `tol`.
pub fn simultaneous_diagonalize(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    a.check_same_dim(b)?;
    let herm_tol = 1e-10 * a.max_abs().max(b.max_abs()).max(1.0);
    if !a.is_hermitian(herm_tol) || !b.is_hermitian(herm_tol) {
        return Err(CartanError::Precondition("simultaneous_diagonalize: inputs must be Hermitian".into()));
    }
    let a = (a + &a.adjoint()).scale_real(0.5);
    let b = (b + &b.adjoint()).scale_real(0.5);

    let mut best: Option<(f64, ComplexMatrix)> = None;
    for k in 0..MIX_COEFFS.len() {
        let v = diagonalize_mixture(&a, &b, k, 0);
        let vh = v.adjoint();
        let residual = (&(&vh * &a) * &v).max_off_diagonal().max((&(&vh * &b) * &v).max_off_diagonal());
        if residual <= tol {
            return Ok(v);
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, v));
        }
    }
    let residual = best.map_or(f64::INFINITY, |(r, _)| r);
    Err(CartanError::NumericalFailure { stage: "simultaneous diagonalization".into(), residual })
}

/// Eigen-decomposition of a unitary: `U = V·diag(e^{iθ})·V†`, θ in (−π, π].
pub fn eig_unitary(u: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !u.is_unitary(1e-8) {
        return Err(CartanError::Precondition(format!(
            "eig_unitary: input not unitary (residual {:e})",
            u.unitarity_residual()
        )));
    }
    let uh = u.adjoint();
    let re = (u + &uh).scale_real(0.5);
    let im = (u - &uh).scale(-I * 0.5);
    let v = simultaneous_diagonalize(&re, &im, 1e-11)?;
    let t = &(&v.adjoint() * u) * &v;
    let phases = (0..u.dim()).map(|k| t[(k, k)].arg()).collect();
    Ok((phases, v))
}

/// Factor a complex-symmetric unitary as `M = O·E·Oᵀ` with `O ∈ SO(N)` real and
/// `E` diagonal unitary.
///
/// `Re(M)` and `Im(M)` are real symmetric and commute whenever `M` is a
/// symmetric unitary, so a real common eigenbasis exists.
pub fn diag_symmetric_unitary(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !m.is_unitary(1e-8) {
        return Err(CartanError::Precondition(format!(
            "diag_symmetric_unitary: input not unitary (residual {:e})",
            m.unitarity_residual()
        )));
    }
    if !m.is_symmetric(1e-8) {
        return Err(CartanError::Precondition("diag_symmetric_unitary: input not symmetric".into()));
    }
    let sym = (m + &m.transpose()).scale_real(0.5);
    let re = sym.real_part();
    let im = sym.imag_part();
    let v = simultaneous_diagonalize(&re, &im, 1e-11)?;

    let leak = v.imag_part().max_abs();
    if leak > 1e-12 {
        return Err(CartanError::NumericalFailure { stage: "real eigenbasis".into(), residual: leak });
    }
    let mut o = v.real_part();
    if o.det().re < 0.0 {
        for r in 0..o.dim() {
            o[(r, 0)] = -o[(r, 0)];
        }
    }

    let t = &(&o.transpose() * m) * &o;
    let e_diag: Vec<C64> = t.diagonal().into_iter().map(|z| z / z.norm()).collect();
    let e = ComplexMatrix::from_diag(&e_diag);
    let residual = (&(&(&o * &e) * &o.transpose()) - m).max_abs();
    if residual > 1e-8 {
        return Err(CartanError::NumericalFailure { stage: "symmetric unitary diagonalization".into(), residual });
    }
    Ok((o, e))
}
