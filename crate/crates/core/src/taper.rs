//! Z2 symmetry detection and qubit tapering.
//!
//! Symmetries are the kernel of the symplectic check matrix of the Hamiltonian over
//! GF(2). The diagonal ones are brought to reduced row-echelon form, so each generator
//! `τ` owns a pivot qubit `q` that no other generator touches. The Clifford
//! `U = (X_q + τ)/√2` maps `τ` to `X_q`; after conjugating by every such `U`, each
//! pivot qubit carries only `I` or `X`, which is replaced by the sector eigenvalue and
//! the qubit dropped.

use crate::chem::ReferenceDeterminant;
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString, PauliSum, C64};

/// Vectors over GF(2) packed in `u128`: bit `j < n` is the X part on qubit `j`, bit
/// `n + j` the Z part.
fn decode(v: u128, n: usize) -> PauliString {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    PauliString::from_masks(n, (v as u64) & mask, ((v >> n) as u64) & mask).expect("in range")
}

/// Fully reduced row-echelon form with each pivot at the row's lowest set bit; rows come
/// back ordered by pivot and zero rows are dropped.
fn rref(mut rows: Vec<u128>) -> Vec<u128> {
    let mut out: Vec<u128> = Vec::new();
    while let Some(pos) = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| **r != 0)
        .min_by_key(|(_, r)| r.trailing_zeros())
        .map(|(i, _)| i)
    {
        let pivot_row = rows.swap_remove(pos);
        let bit = 1u128 << pivot_row.trailing_zeros();
        for r in rows.iter_mut().chain(out.iter_mut()) {
            if *r & bit != 0 {
                *r ^= pivot_row;
            }
        }
        out.push(pivot_row);
    }
    out
}

/// Basis of the null space of `rows` (as a matrix acting on `width`-bit vectors).
fn kernel(rows: &[u128], width: usize) -> Vec<u128> {
    let reduced = rref(rows.to_vec());
    let pivots: Vec<u32> = reduced.iter().map(|r| r.trailing_zeros()).collect();
    (0..width as u32)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = 1u128 << free;
            for (row, &p) in reduced.iter().zip(&pivots) {
                if row >> free & 1 == 1 {
                    v |= 1u128 << p;
                }
            }
            v
        })
        .collect()
}

/// Independent Pauli strings commuting with every term of `h`, in reduced row-echelon
/// form with X columns ordered before Z columns. The rows whose pivot lies in the Z
/// block are purely diagonal and come last.
pub fn find_symmetries(h: &PauliSum) -> Vec<PauliString> {
    let n = h.n_qubits();
    // Row for term t pairs (x_g | z_g) with (z_t | x_t): the symplectic product.
    let rows: Vec<u128> = h
        .strings()
        .filter(|p| !p.is_identity())
        .map(|p| p.z_mask() as u128 | (p.x_mask() as u128) << n)
        .collect();
    rref(kernel(&rows, 2 * n)).into_iter().map(|v| decode(v, n)).collect()
}

/// The diagonal generators among `find_symmetries`, each paired with its pivot qubit.
fn diagonal_generators(h: &PauliSum) -> Vec<(PauliString, usize)> {
    find_symmetries(h)
        .into_iter()
        .filter(PauliString::is_diagonal)
        .map(|g| {
            let q = g.z_mask().trailing_zeros() as usize;
            (g, q)
        })
        .collect()
}

/// Eigenvalue (±1) of each diagonal generator on the determinant's bit pattern.
pub fn sector_of(det: &ReferenceDeterminant, generators: &[PauliString]) -> Result<Vec<i8>> {
    generators
        .iter()
        .map(|g| {
            if !g.is_diagonal() {
                return Err(Error::NonDiagonalGenerator(g.to_string()));
            }
            if g.n_qubits() != det.n_spin_orbitals {
                return Err(Error::QubitMismatch {
                    left: g.n_qubits(),
                    right: det.n_spin_orbitals,
                });
            }
            Ok(if (g.z_mask() & det.bits()).count_ones() % 2 == 0 { 1 } else { -1 })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaperingData {
    pub n_qubits: usize,
    pub generators: Vec<PauliString>,
    /// Qubit whose X operator is paired with each generator.
    pub paulix_partners: Vec<usize>,
    pub sector_signs: Vec<i8>,
    /// Same as `paulix_partners`; these qubits are dropped.
    pub removed_qubits: Vec<usize>,
    pub n_remaining: usize,
}

impl TaperingData {
    /// Diagonal symmetries of `h` with the sector fixed by `det`.
    pub fn for_determinant(h: &PauliSum, det: &ReferenceDeterminant) -> Result<Self> {
        let pairs = diagonal_generators(h);
        let generators: Vec<PauliString> = pairs.iter().map(|(g, _)| *g).collect();
        let signs = sector_of(det, &generators)?;
        TaperingData::with_signs(h.n_qubits(), pairs, signs)
    }

    /// Diagonal symmetries of `h` with explicit sector signs.
    pub fn for_sector(h: &PauliSum, signs: &[i8]) -> Result<Self> {
        TaperingData::with_signs(h.n_qubits(), diagonal_generators(h), signs.to_vec())
    }

    fn with_signs(n_qubits: usize, pairs: Vec<(PauliString, usize)>, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != pairs.len() {
            return Err(Error::invalid(format!(
                "{} sector signs for {} generators",
                signs.len(),
                pairs.len()
            )));
        }
        if signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::invalid("sector signs must be +1 or -1"));
        }
        let partners: Vec<usize> = pairs.iter().map(|(_, q)| *q).collect();
        Ok(TaperingData {
            n_qubits,
            generators: pairs.into_iter().map(|(g, _)| g).collect(),
            removed_qubits: partners.clone(),
            n_remaining: n_qubits - partners.len(),
            paulix_partners: partners,
            sector_signs: signs,
        })
    }
}

/// Restrict `h` to the sector in `td`, returning an operator on `td.n_remaining` qubits.
pub fn taper_operator(h: &PauliSum, td: &TaperingData) -> Result<PauliSum> {
    if h.n_qubits() != td.n_qubits {
        return Err(Error::QubitMismatch {
            left: h.n_qubits(),
            right: td.n_qubits,
        });
    }
    let n = td.n_qubits;
    let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut current = h.clone();
    for (g, &q) in td.generators.iter().zip(&td.paulix_partners) {
        if let Some(bad) = h.strings().find(|t| !t.commutes_unchecked(g)) {
            return Err(Error::invalid(format!("generator {g} does not commute with term {bad}")));
        }
        let u = PauliSum::from_terms(n, [(PauliString::single(n, q, Letter::X), half), (*g, half)])?;
        current = u.multiply(&current)?.multiply(&u)?;
    }
    current.prune();

    let mut out = PauliSum::zero(td.n_remaining).with_tolerance(h.tolerance());
    for (p, c) in current.iter() {
        let mut coeff = *c;
        for (&q, &s) in td.paulix_partners.iter().zip(&td.sector_signs) {
            match p.letter(q) {
                Letter::I => {}
                Letter::X => coeff *= f64::from(s),
                other => {
                    return Err(Error::invalid(format!(
                        "rotated term {p} has {} on tapered qubit {q}",
                        other.as_char()
                    )))
                }
            }
        }
        out.add_term(p.remove_qubits(&td.removed_qubits), coeff)?;
    }
    out.prune();
    Ok(if h.is_hermitian(0.0) { out.real_part() } else { out })
}

/// Occupation bits of the determinant on the remaining qubits.
pub fn taper_state(det: &ReferenceDeterminant, td: &TaperingData) -> Result<u64> {
    if sector_of(det, &td.generators)? != td.sector_signs {
        return Err(Error::SectorMismatch);
    }
    let bits = det.bits();
    let mut out = 0u64;
    let mut k = 0;
    for q in 0..td.n_qubits {
        if td.removed_qubits.contains(&q) {
            continue;
        }
        out |= (bits >> q & 1) << k;
        k += 1;
    }
    Ok(out)
}
