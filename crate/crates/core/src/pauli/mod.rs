//! Phase-exact Pauli string algebra and sparse Pauli sums.

mod string;
mod sum;

pub use string::{Letter, PauliString, Phase, MAX_QUBITS};
pub use sum::{PauliSum, C64, DEFAULT_DROP_TOLERANCE};
