//! Pauli-string algebra on n qubits, Hamiltonians as Pauli coefficient
//! vectors, and Cartan splits of su(2ⁿ).

mod hamiltonian;
mod split;
mod string;

pub use hamiltonian::{i_times, trace_inner_product, HamiltonianVector};
pub use split::{
    adapted_basis_properties, builtin_split, magic_basis, single_x_frame, verify_cartan_split,
    verify_maximal_abelian, AdaptedBasisReport, CartanSplit, SplitKind, SplitReport, SplitViolation,
    Subspace,
};
pub use string::{multiply_strings, Pauli, PauliString, Phase};
