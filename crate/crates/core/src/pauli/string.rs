use std::fmt;
use std::str::FromStr;

use crate::error::CartanError;
use crate::matrix::{ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    fn from_code(code: usize) -> Self {
        match code & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// `self·other = i^k · result`.
    fn product(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }
}

/// A power of `i`: the phase picked up when multiplying Pauli strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }
}

/// Tensor product of single-qubit Paulis; the first letter acts on the
/// most significant qubit (leftmost Kronecker factor).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(n: usize) -> Self {
        Self { letters: vec![Pauli::I; n] }
    }

    /// Inverse of [`PauliString::code`].
    pub fn from_code(n: usize, code: usize) -> Self {
        let letters = (0..n).map(|q| Pauli::from_code(code >> (2 * (n - 1 - q)))).collect();
        Self { letters }
    }

    /// Base-4 integer with `I=0, X=1, Y=2, Z=3`, first letter most significant.
    pub fn code(&self) -> usize {
        self.letters.iter().fold(0, |acc, &p| acc * 4 + p as usize)
    }

    /// Position in the 4ⁿ−1 non-identity strings; `None` for the identity.
    pub fn basis_index(&self) -> Option<usize> {
        self.code().checked_sub(1)
    }

    pub fn qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn count(&self, letter: Pauli) -> usize {
        self.letters.iter().filter(|&&p| p == letter).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// True when the matrix is diagonal (only I and Z letters).
    pub fn is_diagonal(&self) -> bool {
        self.letters.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    pub fn multiply(&self, other: &PauliString) -> (Phase, PauliString) {
        assert_eq!(self.qubits(), other.qubits(), "Pauli strings on different qubit counts");
        let mut k = 0u8;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (e, p) = a.product(b);
                k += e;
                p
            })
            .collect();
        (Phase(k % 4), PauliString { letters })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        self.multiply(other).0.is_real()
    }

    /// `[P, Q] = 2·PQ` when the strings anticommute, otherwise 0.
    /// Returns the coefficient and the resulting string.
    pub fn commutator(&self, other: &PauliString) -> Option<(C64, PauliString)> {
        let (phase, r) = self.multiply(other);
        if phase.is_real() {
            None
        } else {
            Some((phase.to_complex() * 2.0, r))
        }
    }

    /// Column action: `P|c⟩ = phase · |c ⊕ flip_mask⟩`.
    pub fn action(&self, c: usize) -> (usize, C64) {
        let n = self.qubits();
        let mut row = c;
        let mut phase = C64::new(1.0, 0.0);
        for (q, &p) in self.letters.iter().enumerate() {
            let bit_pos = n - 1 - q;
            let bit = (c >> bit_pos) & 1;
            match p {
                Pauli::I => {}
                Pauli::X => row ^= 1 << bit_pos,
                Pauli::Y => {
                    row ^= 1 << bit_pos;
                    phase *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
                }
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        (row, phase)
    }

    pub fn dense(&self) -> ComplexMatrix {
        let dim = 1usize << self.qubits();
        let mut m = ComplexMatrix::zeros(dim);
        for c in 0..dim {
            let (r, phase) = self.action(c);
            m[(r, c)] = phase;
        }
        m
    }

    /// `tr(P·H)` without forming `P`.
    pub fn trace_against(&self, h: &ComplexMatrix) -> C64 {
        let dim = 1usize << self.qubits();
        (0..dim)
            .map(|c| {
                let (r, phase) = self.action(c);
                phase * h[(c, r)]
            })
            .sum()
    }

    /// Every string on `n` qubits except the identity, in basis-index order.
    pub fn all_non_identity(n: usize) -> Vec<PauliString> {
        (1..(1usize << (2 * n))).map(|code| PauliString::from_code(n, code)).collect()
    }
}

/// `(phase, R)` with `P·Q = phase·R`.
pub fn multiply_strings(p: &PauliString, q: &PauliString) -> (Phase, PauliString) {
    p.multiply(q)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = CartanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(CartanError::Parse("empty Pauli string".into()));
        }
        let letters = s
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(CartanError::Parse(format!("invalid Pauli letter '{other}' in \"{s}\""))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { letters })
    }
}

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(multiply_strings(&ps("X"), &ps("Y")), (Phase::I, ps("Z")));
        assert_eq!(multiply_strings(&ps("Y"), &ps("X")), (Phase::MINUS_I, ps("Z")));
        assert_eq!(multiply_strings(&ps("XZ"), &ps("YZ")), (Phase::I, ps("ZI")));
    }

    #[test]
    fn products_match_dense_matrices() {
        for n in 1..=2 {
            let all: Vec<_> = std::iter::once(PauliString::identity(n))
                .chain(PauliString::all_non_identity(n))
                .collect();
            for p in &all {
                let (phase, r) = multiply_strings(p, p);
                assert_eq!(phase, Phase::ONE);
                assert!(r.is_identity());
                for q in &all {
                    let (phase, r) = multiply_strings(p, q);
                    let lhs = &p.dense() * &q.dense();
                    let rhs = r.dense().scale(phase.to_complex());
                    assert_eq!(lhs, rhs, "{p} * {q}");
                }
            }
        }
    }

    #[test]
    fn dense_realization_is_hermitian_involution() {
        for p in PauliString::all_non_identity(3) {
            let m = p.dense();
            assert!(m.is_hermitian(0.0));
            assert_eq!(m.trace(), C64::new(0.0, 0.0));
            assert_eq!(&m * &m, ComplexMatrix::identity(8));
        }
    }

    #[test]
    fn code_round_trip_and_ordering() {
        assert_eq!(ps("X").basis_index(), Some(0));
        assert_eq!(ps("ZZ").basis_index(), Some(14));
        assert_eq!(ps("II").basis_index(), None);
        for code in 0..64 {
            assert_eq!(PauliString::from_code(3, code).code(), code);
        }
        assert_eq!(PauliString::from_code(2, 6).to_string(), "XY");
    }

    #[test]
    fn dense_kron_order() {
        let x = ps("X").dense();
        let z = ps("Z").dense();
        assert_eq!(ps("XZ").dense(), x.kron(&z));
    }

    #[test]
    fn parse_errors() {
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
        assert_eq!("xyz".parse::<PauliString>().unwrap().to_string(), "XYZ");
    }
}
