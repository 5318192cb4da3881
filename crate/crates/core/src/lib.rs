//! Variational inner-region R-matrix solver on a simulated qubit register.
//!
//! The pipeline runs integrals → Jordan–Wigner Hamiltonian → projected
//! ansatz → variational eigensolver → boundary amplitudes and R(E).
//! Qubit 0 is the least significant bit of every basis index.

pub mod ansatz;
pub mod error;
pub mod fermion;
pub mod model;
pub mod oracle;
pub mod pauli;
pub mod projection;
pub mod rmatrix;
pub mod solver;
pub mod statevector;
pub mod synthetic;

pub use error::{Error, Result};
pub use pauli::{Letter, PauliString, PauliSum, PauliWord, Phase};
