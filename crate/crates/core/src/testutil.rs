//! Dense-matrix oracles for unit tests. Built from explicit 2x2 Kronecker products so
//! they share no code with the symplectic routines they check.

use nalgebra::{Complex, DMatrix};
use rand::Rng;

use crate::pauli::{Letter, PauliString, PauliSum, C64};

pub fn letter_matrix(l: Letter) -> DMatrix<C64> {
    let o = Complex::new(0.0, 0.0);
    let r = Complex::new(1.0, 0.0);
    let i = Complex::new(0.0, 1.0);
    match l {
        Letter::I => DMatrix::from_row_slice(2, 2, &[r, o, o, r]),
        Letter::X => DMatrix::from_row_slice(2, 2, &[o, r, r, o]),
        Letter::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        Letter::Z => DMatrix::from_row_slice(2, 2, &[r, o, o, -r]),
    }
}

/// Qubit 0 is the least significant index bit: `M = M_{n-1} ⊗ ... ⊗ M_0`.
pub fn dense_of_string(p: &PauliString) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(1, 1, Complex::new(1.0, 0.0));
    for q in (0..p.n_qubits()).rev() {
        m = m.kronecker(&letter_matrix(p.letter(q)));
    }
    m
}

pub fn dense_of_sum(s: &PauliSum) -> DMatrix<C64> {
    let d = 1usize << s.n_qubits();
    let mut m = DMatrix::zeros(d, d);
    for (p, c) in s.iter() {
        m += dense_of_string(p) * *c;
    }
    m
}

pub fn random_string(rng: &mut impl Rng, n: usize) -> PauliString {
    let mask = (1u64 << n) - 1;
    PauliString::from_masks(n, rng.random::<u64>() & mask, rng.random::<u64>() & mask).unwrap()
}

/// Random sum; `hermitian` restricts coefficients to the reals.
pub fn random_sum(rng: &mut impl Rng, n: usize, terms: usize, hermitian: bool) -> PauliSum {
    let mut s = PauliSum::zero(n);
    for _ in 0..terms {
        let re = rng.random_range(-1.0..1.0);
        let im = if hermitian {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        };
        s.add_term(random_string(rng, n), Complex::new(re, im)).unwrap();
    }
    s.prune();
    s
}

/// Largest entry modulus of a complex matrix.
pub fn cmax(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
