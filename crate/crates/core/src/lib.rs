//! Exact optimal synthesis cost for Cartan control problems on n-qubit unitaries.
//!
//! The Hamiltonian space 𝔰𝔲(2ⁿ) is split into a cheap subalgebra 𝔩 and its
//! complement 𝔭. Motion along 𝔩 is penalized by a factor ε; as ε → 0 the
//! minimal cost of reaching `U` from the identity is the distance from the
//! eigenphase vector of the middle KAK factor to the lattice
//! `π·{m ∈ ℤᴺ : Σm = 0}`.
//!
//! Modules, bottom up:
//! - [`matrix`]: dense complex kernels (Jacobi eigensolver, expm/logm, symmetric-unitary diagonalization).
//! - [`pauli`]: Pauli strings, Hamiltonian coefficient vectors, Cartan splits.
//! - [`kak`]: `U = e^{iL}·e^{iZ}·e^{iM}` via the adapted-frame factorization `A·D·Bᵀ`.
//! - [`cost`]: sum-zero lattice nearest point and the optimal cost report.
//! - [`metric`]: the penalty metric, the dexp operator and finite-difference coordinate Grams.
//! - [`geodesic`]: piecewise-constant control paths and the ε-sweep oracle.

pub mod cost;
pub mod error;
pub mod geodesic;
pub mod kak;
pub mod matrix;
pub mod metric;
pub mod pauli;

pub use error::{CartanError, Result};
pub use matrix::ComplexMatrix;
