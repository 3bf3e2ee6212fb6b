//! Molecular front end: geometry, STO-3G integrals, restricted Hartree–Fock,
//! spin-orbital tables, the Jordan–Wigner mapping and FCIDUMP interchange.

mod determinant;
mod fcidump;
mod geometry;
mod integrals;
mod jw;
mod scf;
mod spin_orbital;

pub use determinant::{reference_determinant, ReferenceDeterminant, SpinSector};
pub use fcidump::{fcidump_read, fcidump_write, format_fcidump, parse_fcidump};
pub use geometry::{build_h_chain, Atom, Element, Geometry, LengthUnit};
pub use integrals::{boys0, compute_integrals, eri_index, IntegralSet};
pub use jw::{annihilation, creation, jordan_wigner, number_operator, sz_operator};
pub use scf::{hartree_fock, ScfOptions, ScfResult};
pub use spin_orbital::{second_quantized_hamiltonian, SpinOrbitalHamiltonian};
