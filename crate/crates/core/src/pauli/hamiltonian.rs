use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::PauliString;
use crate::error::{CartanError, Result};
use crate::matrix::{ComplexMatrix, C64};

/// A traceless Hermitian operator `H = Σ c_P·P` stored by its real Pauli
/// coefficients over the 4ⁿ−1 non-identity strings (unnormalized: `tr(P²) = 2ⁿ`).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianVector {
    n: usize,
    coeffs: Vec<f64>,
}

impl HamiltonianVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, coeffs: vec![0.0; (1usize << (2 * n)) - 1] }
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = (1usize << (2 * n)) - 1;
        if coeffs.len() != expected {
            return Err(CartanError::DimensionMismatch { left: expected, right: coeffs.len() });
        }
        Ok(Self { n, coeffs })
    }

    /// Build from `(string, coefficient)` terms; repeated strings accumulate.
    pub fn from_terms(n: usize, terms: &[(&str, f64)]) -> Result<Self> {
        let mut h = Self::zeros(n);
        for &(s, c) in terms {
            let p: PauliString = s.parse()?;
            if p.qubits() != n {
                return Err(CartanError::DimensionMismatch { left: n, right: p.qubits() });
            }
            let idx = p
                .basis_index()
                .ok_or_else(|| CartanError::Precondition("identity term in a traceless Hamiltonian".into()))?;
            h.coeffs[idx] += c;
        }
        Ok(h)
    }

    /// Pauli coefficients `c_P = Re tr(P·H) / 2ⁿ` of a dense matrix.
    ///
    /// Any identity component and any anti-Hermitian part are discarded; callers
    /// that need membership guarantees compare `dense()` against the input.
    pub fn from_dense(h: &ComplexMatrix) -> Result<Self> {
        let dim = h.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(CartanError::Precondition(format!("dimension {dim} is not a power of two ≥ 2")));
        }
        let n = dim.trailing_zeros() as usize;
        let norm = dim as f64;
        let coeffs = PauliString::all_non_identity(n)
            .iter()
            .map(|p| p.trace_against(h).re / norm)
            .collect();
        Ok(Self { n, coeffs })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        p.basis_index().map_or(0.0, |i| self.coeffs[i])
    }

    pub fn set(&mut self, p: &PauliString, value: f64) {
        if let Some(i) = p.basis_index() {
            self.coeffs[i] = value;
        }
    }

    pub fn dense(&self) -> ComplexMatrix {
        let dim = 1usize << self.n;
        let mut m = ComplexMatrix::zeros(dim);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let p = PauliString::from_code(self.n, i + 1);
            for col in 0..dim {
                let (row, phase) = p.action(col);
                m[(row, col)] += phase * c;
            }
        }
        m
    }

    /// `√tr(H²)`, the trace norm used for all costs.
    pub fn norm(&self) -> f64 {
        trace_inner_product(self, self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Non-zero terms, keyed by letter string.
    pub fn terms(&self) -> BTreeMap<String, f64> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (PauliString::from_code(self.n, i + 1).to_string(), c))
            .collect()
    }
}

/// `tr(A·B) = 2ⁿ·Σ a_P·b_P`.
pub fn trace_inner_product(a: &HamiltonianVector, b: &HamiltonianVector) -> f64 {
    assert_eq!(a.n, b.n, "inner product of Hamiltonians on different qubit counts");
    let dot: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum();
    dot * (1usize << a.n) as f64
}

impl Add for &HamiltonianVector {
    type Output = HamiltonianVector;
    fn add(self, rhs: &HamiltonianVector) -> HamiltonianVector {
        assert_eq!(self.n, rhs.n);
        HamiltonianVector { n: self.n, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &HamiltonianVector {
    type Output = HamiltonianVector;
    fn sub(self, rhs: &HamiltonianVector) -> HamiltonianVector {
        assert_eq!(self.n, rhs.n);
        HamiltonianVector { n: self.n, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<f64> for &HamiltonianVector {
    type Output = HamiltonianVector;
    fn mul(self, s: f64) -> HamiltonianVector {
        self.scale(s)
    }
}

impl Neg for &HamiltonianVector {
    type Output = HamiltonianVector;
    fn neg(self) -> HamiltonianVector {
        self.scale(-1.0)
    }
}

impl Serialize for HamiltonianVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.terms().serialize(s)
    }
}

/// Reads a term map; the qubit count comes from the key length, so an empty
/// map cannot be deserialized on its own.
impl<'de> Deserialize<'de> for HamiltonianVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let terms = BTreeMap::<String, f64>::deserialize(d)?;
        let n = terms.keys().next().map(|k| k.len()).ok_or_else(|| D::Error::custom("empty term map"))?;
        let pairs: Vec<(&str, f64)> = terms.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        HamiltonianVector::from_terms(n, &pairs).map_err(D::Error::custom)
    }
}

impl From<&HamiltonianVector> for ComplexMatrix {
    fn from(h: &HamiltonianVector) -> Self {
        h.dense()
    }
}

/// `i·H` as a dense anti-Hermitian matrix, ready for `expm`.
pub fn i_times(h: &HamiltonianVector) -> ComplexMatrix {
    h.dense().scale(C64::new(0.0, 1.0))
}
