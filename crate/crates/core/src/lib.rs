//! Moment-based excited-state energetics for small molecules on a simulated qubit
//! register.
//!
//! The pipeline runs geometry → integrals → Hartree–Fock → Jordan–Wigner qubit
//! Hamiltonian, then estimates Hamiltonian moments in a reference determinant and turns
//! them into eigenvalue upper bounds. Supporting modules cover Z2 qubit tapering,
//! qubit-wise-commuting measurement grouping with packed parallel execution, shot
//! sampling and readout-error mitigation, plus an exact-diagonalization reference.

pub mod chem;
pub mod error;
pub mod exact;
pub mod measure;
pub mod mitigation;
pub mod moments;
pub mod pauli;
pub mod pds;
pub mod pipeline;
pub mod sim;
pub mod taper;
pub mod units;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use pauli::{PauliString, PauliSum};
