use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpinSector {
    Singlet,
    Triplet,
}

impl SpinSector {
    pub fn name(self) -> &'static str {
        match self {
            SpinSector::Singlet => "singlet",
            SpinSector::Triplet => "triplet",
        }
    }
}

impl FromStr for SpinSector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "singlet" | "s" => Ok(SpinSector::Singlet),
            "triplet" | "t" => Ok(SpinSector::Triplet),
            _ => Err(Error::invalid(format!("unknown spin sector {s:?}"))),
        }
    }
}

impl fmt::Display for SpinSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Single Slater determinant over blocked spin orbitals (α block, then β block).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceDeterminant {
    pub n_spin_orbitals: usize,
    /// Occupied spin-orbital indices, ascending.
    pub occupied: Vec<usize>,
    /// Twice the S_z quantum number.
    pub ms2: i32,
}

impl ReferenceDeterminant {
    pub fn from_occupied(n_spin_orbitals: usize, mut occupied: Vec<usize>) -> Result<Self> {
        if n_spin_orbitals % 2 != 0 || n_spin_orbitals > 64 {
            return Err(Error::invalid(format!(
                "{n_spin_orbitals} spin orbitals (need an even count up to 64)"
            )));
        }
        occupied.sort_unstable();
        occupied.dedup();
        if let Some(&bad) = occupied.iter().find(|&&o| o >= n_spin_orbitals) {
            return Err(Error::invalid(format!("spin orbital {bad} out of range")));
        }
        let half = n_spin_orbitals / 2;
        let n_alpha = occupied.iter().filter(|&&o| o < half).count() as i32;
        let n_beta = occupied.len() as i32 - n_alpha;
        Ok(ReferenceDeterminant {
            n_spin_orbitals,
            occupied,
            ms2: n_alpha - n_beta,
        })
    }

    pub fn n_electrons(&self) -> usize {
        self.occupied.len()
    }

    /// Occupation bit pattern; bit `k` set when spin orbital `k` is occupied.
    pub fn bits(&self) -> u64 {
        self.occupied.iter().fold(0, |acc, &o| acc | (1u64 << o))
    }

    pub fn s_z(&self) -> f64 {
        self.ms2 as f64 / 2.0
    }
}

/// Aufbau determinant for the requested spin sector, assuming spatial orbitals are
/// indexed in ascending energy.
///
/// The singlet sector pairs electrons (`n_α = ⌈n/2⌉`); the triplet sector promotes one
/// β electron to the lowest empty α orbital, e.g. `{1α, 1β, 2α, 3α}` for four electrons.
pub fn reference_determinant(
    sector: SpinSector,
    n_electrons: usize,
    n_spin_orbitals: usize,
) -> Result<ReferenceDeterminant> {
    if n_electrons > n_spin_orbitals {
        return Err(Error::invalid(format!(
            "{n_electrons} electrons exceed {n_spin_orbitals} spin orbitals"
        )));
    }
    let half = n_spin_orbitals / 2;
    let (n_alpha, n_beta) = match sector {
        SpinSector::Singlet => (n_electrons.div_ceil(2), n_electrons / 2),
        SpinSector::Triplet => {
            if n_electrons < 2 {
                return Err(Error::invalid("a triplet needs at least two electrons"));
            }
            (n_electrons / 2 + 1, n_electrons - n_electrons / 2 - 1)
        }
    };
    if n_alpha > half || n_beta > half {
        return Err(Error::invalid(format!(
            "{n_alpha}α/{n_beta}β electrons do not fit in {half} spatial orbitals"
        )));
    }
    let occupied = (0..n_alpha).chain((0..n_beta).map(|b| half + b)).collect();
    ReferenceDeterminant::from_occupied(n_spin_orbitals, occupied)
}
