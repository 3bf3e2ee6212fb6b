//! Physical constants shared across the crate.

pub const HARTREE_TO_EV: f64 = 27.211386245988;
pub const ANGSTROM_TO_BOHR: f64 = 1.8897259886;
