//! Exact reference spectra by dense diagonalization, optionally restricted to a
//! particle-number and spin-projection sector.
//!
//! Sectors use the blocked spin-orbital layout: the lower half of the qubits are α
//! orbitals, the upper half β.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, C64};
use crate::pds::{transitions_from_levels, Transitions};

pub const MAX_DENSE_QUBITS: usize = 16;
/// Largest matrix dimension diagonalized densely.
pub const MAX_DENSE_DIMENSION: usize = 4096;

/// Levels closer than this are treated as spin partners.
const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Electron count and twice the spin projection.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sector {
    pub n_electrons: usize,
    pub ms2: i32,
}

impl Sector {
    pub fn new(n_electrons: usize, ms2: i32) -> Self {
        Sector { n_electrons, ms2 }
    }

    fn contains(&self, n_qubits: usize, bits: u64) -> bool {
        let half = n_qubits / 2;
        let alpha = (bits & ((1u64 << half) - 1)).count_ones() as i32;
        let beta = (bits >> half).count_ones() as i32;
        (alpha + beta) as usize == self.n_electrons && alpha - beta == self.ms2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    /// Ascending, hartree.
    pub eigenvalues: Vec<f64>,
    /// Sector of each eigenvalue, when known.
    pub sector_labels: Option<Vec<Sector>>,
}

impl SpectrumResult {
    pub fn ground(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }
}

fn hermitian_eigenvalues(h: &PauliSum, basis: &[u64]) -> Vec<f64> {
    let dim = basis.len();
    let index = |b: u64| basis.binary_search(&b).ok();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (col, &b) in basis.iter().enumerate() {
        for (p, c) in h.iter() {
            let (target, phase) = p.apply_to_basis(b);
            if let Some(row) = index(target) {
                m[(row, col)] += c * phase.to_complex();
            }
        }
    }
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Eigenvalues of `h`, over the whole register or within `sector`.
pub fn exact_spectrum(h: &PauliSum, sector: Option<Sector>) -> Result<SpectrumResult> {
    let n = h.n_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::DimensionTooLarge(format!(
            "{n} qubits exceed the dense limit of {MAX_DENSE_QUBITS}"
        )));
    }
    if sector.is_some() && n % 2 != 0 {
        return Err(Error::invalid(format!(
            "spin sectors need an even number of spin orbitals, got {n}"
        )));
    }
    let basis: Vec<u64> = (0..1u64 << n)
        .filter(|&b| sector.is_none_or(|s| s.contains(n, b)))
        .collect();
    if basis.is_empty() {
        return Err(Error::InsufficientLevels("the sector holds no basis states".into()));
    }
    if basis.len() > MAX_DENSE_DIMENSION {
        return Err(Error::DimensionTooLarge(format!(
            "dimension {} exceeds the dense limit of {MAX_DENSE_DIMENSION}",
            basis.len()
        )));
    }
    let eigenvalues = hermitian_eigenvalues(h, &basis);
    let sector_labels = sector.map(|s| vec![s; eigenvalues.len()]);
    Ok(SpectrumResult {
        eigenvalues,
        sector_labels,
    })
}

/// Every (electron count, spin projection) block diagonalized separately and merged.
/// Assumes `h` conserves both quantum numbers.
pub fn labelled_spectrum(h: &PauliSum) -> Result<SpectrumResult> {
    let n = h.n_qubits();
    if n % 2 != 0 {
        return Err(Error::invalid(format!("{n} qubits do not split into spin blocks")));
    }
    let half = n as i32 / 2;
    let mut levels: Vec<(f64, Sector)> = Vec::new();
    for ne in 0..=n {
        for ms2 in (-half..=half).filter(|m| (ne as i32 + m) % 2 == 0) {
            let s = Sector::new(ne, ms2);
            let n_alpha = (ne as i32 + ms2) / 2;
            let n_beta = ne as i32 - n_alpha;
            if n_alpha < 0 || n_beta < 0 || n_alpha > half || n_beta > half {
                continue;
            }
            let r = exact_spectrum(h, Some(s))?;
            levels.extend(r.eigenvalues.into_iter().map(|e| (e, s)));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SpectrumResult {
        eigenvalues: levels.iter().map(|l| l.0).collect(),
        sector_labels: Some(levels.into_iter().map(|l| l.1).collect()),
    })
}

/// Spin-singlet levels of an `S_z = 0` spectrum: those without a partner in the
/// `S_z = 1` spectrum of the same electron count.
pub fn singlet_levels(sz0: &SpectrumResult, sz1: &SpectrumResult) -> Vec<f64> {
    sz0.eigenvalues
        .iter()
        .copied()
        .filter(|e| !sz1.eigenvalues.iter().any(|t| (t - e).abs() < DEGENERACY_TOLERANCE))
        .collect()
}

/// S0→S1 and S0→T0 in eV from the `S_z = 0` and `S_z = 1` spectra.
pub fn exact_transitions(singlet_sector: &SpectrumResult, triplet_sector: &SpectrumResult) -> Result<Transitions> {
    let singlets = singlet_levels(singlet_sector, triplet_sector);
    if singlets.len() < 2 {
        // Identical inputs carry no spin information: fall back to raw ordering.
        if singlet_sector == triplet_sector && singlet_sector.eigenvalues.len() >= 2 {
            let e = &singlet_sector.eigenvalues;
            return Ok(transitions_from_levels(e[0], e[1], e[0]));
        }
        return Err(Error::InsufficientLevels(format!(
            "{} spin-singlet levels found, need 2",
            singlets.len()
        )));
    }
    let t0 = triplet_sector
        .ground()
        .ok_or_else(|| Error::InsufficientLevels("empty triplet spectrum".into()))?;
    Ok(transitions_from_levels(singlets[0], singlets[1], t0))
}
