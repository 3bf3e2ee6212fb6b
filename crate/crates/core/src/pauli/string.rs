use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;

use crate::error::{Error, Result};

/// Widest register a [`PauliString`] can address.
pub const MAX_QUBITS: usize = 64;

/// Power of `i`: the scalar picked up when two Pauli strings are multiplied.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(e: i64) -> Self {
        Phase(e.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex<f64> {
        match self.0 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) & 3)
    }
}

/// Single-qubit Pauli letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' => Some(Letter::I),
            'X' | 'x' => Some(Letter::X),
            'Y' | 'y' => Some(Letter::Y),
            'Z' | 'z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-qubit Paulis in symplectic form.
///
/// Bit `k` of `x`/`z` describes qubit `k`; `(x, z)` decodes as `(0,0)=I`, `(1,0)=X`,
/// `(1,1)=Y`, `(0,1)=Z`. As an operator the string is the Hermitian product of its
/// letters, i.e. `i^{|x&z|} X^x Z^z`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

fn width_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString {
            n_qubits,
            x: 0,
            z: 0,
        }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit limit"
            )));
        }
        let m = width_mask(n_qubits);
        if x & !m != 0 || z & !m != 0 {
            return Err(Error::invalid(format!(
                "masks x={x:#x} z={z:#x} do not fit in {n_qubits} qubits"
            )));
        }
        Ok(PauliString { n_qubits, x, z })
    }

    /// Single non-identity letter on `qubit`.
    pub fn single(n_qubits: usize, qubit: usize, letter: Letter) -> Self {
        assert!(qubit < n_qubits);
        let (xb, zb) = letter.bits();
        PauliString {
            n_qubits,
            x: (xb as u64) << qubit,
            z: (zb as u64) << qubit,
        }
    }

    /// Z on every qubit set in `mask`.
    pub fn z_string(n_qubits: usize, mask: u64) -> Self {
        PauliString::from_masks(n_qubits, 0, mask).expect("mask wider than register")
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        let mut p = PauliString::from_masks(letters.len(), 0, 0)?;
        for (q, l) in letters.iter().enumerate() {
            p.set(q, *l);
        }
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the string has no X or Y letters.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        Letter::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    pub fn set(&mut self, qubit: usize, letter: Letter) {
        assert!(qubit < self.n_qubits);
        let bit = 1u64 << qubit;
        let (xb, zb) = letter.bits();
        self.x = if xb { self.x | bit } else { self.x & !bit };
        self.z = if zb { self.z | bit } else { self.z & !bit };
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.n_qubits).map(move |q| self.letter(q))
    }

    fn check(&self, other: &PauliString) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }

    /// `self * other` as a Pauli string and the accompanying power of `i`.
    pub fn multiply(&self, other: &PauliString) -> Result<(PauliString, Phase)> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> (PauliString, Phase) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // i^{|x1 z1|} X^x1 Z^z1 * i^{|x2 z2|} X^x2 Z^z2, commuting Z^z1 past X^x2 and
        // re-absorbing i^{|x z|} of the product.
        let e = (self.x & self.z).count_ones() as i64 + (other.x & other.z).count_ones() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x & z).count_ones() as i64;
        (
            PauliString {
                n_qubits: self.n_qubits,
                x,
                z,
            },
            Phase::from_exponent(e),
        )
    }

    pub(crate) fn commutes_unchecked(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Symplectic commutation test.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check(other)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn qwc_unchecked(&self, other: &PauliString) -> bool {
        let both = self.support() & other.support();
        (self.x ^ other.x) & both == 0 && (self.z ^ other.z) & both == 0
    }

    /// Qubit-wise commutation: on every qubit the letters agree or one is identity.
    pub fn qubit_wise_commutes(&self, other: &PauliString) -> Result<bool> {
        self.check(other)?;
        Ok(self.qwc_unchecked(other))
    }

    /// Action on a computational basis state: `P|b> = phase |b ^ x>`.
    pub fn apply_to_basis(&self, bits: u64) -> (u64, Phase) {
        let e = (self.x & self.z).count_ones() as i64 + 2 * (self.z & bits).count_ones() as i64;
        (bits ^ self.x, Phase::from_exponent(e))
    }

    /// Drop the listed qubits, compacting the remaining ones towards qubit 0.
    pub fn remove_qubits(&self, removed: &[usize]) -> PauliString {
        let mut out = PauliString::identity(self.n_qubits - removed.len());
        let mut k = 0;
        for q in 0..self.n_qubits {
            if removed.contains(&q) {
                continue;
            }
            out.set(k, self.letter(q));
            k += 1;
        }
        out
    }

    /// Place this string at `offset` inside a wider register.
    pub fn embed(&self, n_qubits: usize, offset: usize) -> Result<PauliString> {
        if offset + self.n_qubits > n_qubits {
            return Err(Error::invalid(format!(
                "cannot place {} qubits at offset {offset} in a {n_qubits}-qubit register",
                self.n_qubits
            )));
        }
        PauliString::from_masks(n_qubits, self.x << offset, self.z << offset)
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n_qubits, self.z, self.x).cmp(&(other.n_qubits, other.z, other.x))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Letters with qubit 0 leftmost; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                Letter::from_char(c)
                    .ok_or_else(|| Error::invalid(format!("bad Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::from_letters(&letters)
    }
}
