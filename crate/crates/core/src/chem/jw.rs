//! Jordan–Wigner encoding: mode `j` maps to qubit `j`, with a Z string on all lower
//! qubits. `a†_j = Z_0…Z_{j-1} (X_j − iY_j)/2`, so an occupied mode reads as bit 1.

use super::spin_orbital::SpinOrbitalHamiltonian;
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString, PauliSum, C64};

const COEFF_CUTOFF: f64 = 1e-14;

fn ladder(n: usize, j: usize, dagger: bool) -> PauliSum {
    let tail = (1u64 << j) - 1;
    let mut x = PauliString::z_string(n, tail);
    x.set(j, Letter::X);
    let mut y = PauliString::z_string(n, tail);
    y.set(j, Letter::Y);
    let sign = if dagger { -0.5 } else { 0.5 };
    PauliSum::from_terms(n, [(x, C64::new(0.5, 0.0)), (y, C64::new(0.0, sign))])
        .expect("ladder operator")
}

pub fn creation(n_modes: usize, j: usize) -> PauliSum {
    ladder(n_modes, j, true)
}

pub fn annihilation(n_modes: usize, j: usize) -> PauliSum {
    ladder(n_modes, j, false)
}

/// `Σ_j a†_j a_j`.
pub fn number_operator(n_modes: usize) -> PauliSum {
    let mut s = PauliSum::zero(n_modes);
    for j in 0..n_modes {
        let nj = creation(n_modes, j)
            .multiply(&annihilation(n_modes, j))
            .unwrap();
        s = s.add(&nj).unwrap();
    }
    s
}

/// `S_z = (N_α − N_β)/2` under blocked spin ordering.
pub fn sz_operator(n_spatial: usize) -> PauliSum {
    let n = 2 * n_spatial;
    let mut s = PauliSum::zero(n);
    for j in 0..n {
        let w = if j < n_spatial { 0.5 } else { -0.5 };
        let nj = creation(n, j).multiply(&annihilation(n, j)).unwrap();
        s = s.add(&nj.scale(C64::new(w, 0.0))).unwrap();
    }
    s
}

/// Qubit Hamiltonian `E_core + Σ h_PQ a†_P a_Q + ¼ Σ <PQ||RS> a†_P a†_Q a_S a_R`.
pub fn jordan_wigner(t: &SpinOrbitalHamiltonian) -> Result<PauliSum> {
    let n = t.n_spin_orbitals();
    if n > crate::pauli::MAX_QUBITS {
        return Err(Error::invalid(format!("{n} spin orbitals exceed the qubit limit")));
    }
    let cre: Vec<PauliSum> = (0..n).map(|j| creation(n, j)).collect();
    let ann: Vec<PauliSum> = (0..n).map(|j| annihilation(n, j)).collect();

    let mut h = PauliSum::zero(n);
    h.add_term(PauliString::identity(n), C64::new(t.core_energy, 0.0))?;

    for p in 0..n {
        for q in 0..n {
            let v = t.one_body[(p, q)];
            if v.abs() < COEFF_CUTOFF {
                continue;
            }
            for (s, c) in cre[p].multiply(&ann[q])?.iter() {
                h.add_term(*s, c * v)?;
            }
        }
    }

    let mut pairs_cc = vec![vec![None; n]; n];
    let mut pairs_aa = vec![vec![None; n]; n];
    for p in 0..n {
        for q in 0..n {
            if p != q {
                pairs_cc[p][q] = Some(cre[p].multiply(&cre[q])?);
                pairs_aa[p][q] = Some(ann[p].multiply(&ann[q])?);
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            let Some(cc) = &pairs_cc[p][q] else { continue };
            for r in 0..n {
                for s in 0..n {
                    let v = t.antisym(p, q, r, s);
                    if v.abs() < COEFF_CUTOFF {
                        continue;
                    }
                    let Some(aa) = &pairs_aa[s][r] else { continue };
                    for (st, c) in cc.multiply(aa)?.iter() {
                        h.add_term(*st, c * (0.25 * v))?;
                    }
                }
            }
        }
    }
    h.prune();
    let imag = h.max_imaginary();
    if imag > 1e-10 {
        return Err(Error::invalid(format!(
            "mapped Hamiltonian is not Hermitian (imaginary residue {imag:e})"
        )));
    }
    Ok(h.real_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{build_h_chain, compute_integrals, hartree_fock, second_quantized_hamiltonian, ScfOptions};
    use crate::testutil::{cmax, dense_of_string, dense_of_sum};
    use nalgebra::DMatrix;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn number_operator_single_mode() {
        let n = number_operator(1);
        assert_eq!(n.len(), 2);
        assert!((n.coefficient(&ps("I")) - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((n.coefficient(&ps("Z")) - C64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    /// Fock-space matrix built by applying ladder operators to occupation bitstrings.
    fn fermionic_dense(t: &SpinOrbitalHamiltonian) -> DMatrix<f64> {
        let n = t.n_spin_orbitals();
        let dim = 1usize << n;
        let apply = |state: u64, mode: usize, create: bool| -> Option<(u64, f64)> {
            let occ = (state >> mode) & 1 == 1;
            if occ == create {
                return None;
            }
            let sign = if (state & ((1u64 << mode) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Some((state ^ (1u64 << mode), sign))
        };
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim as u64 {
            m[(col as usize, col as usize)] += t.core_energy;
            for p in 0..n {
                for q in 0..n {
                    let Some((s1, f1)) = apply(col, q, false) else { continue };
                    let Some((s2, f2)) = apply(s1, p, true) else { continue };
                    m[(s2 as usize, col as usize)] += t.one_body[(p, q)] * f1 * f2;
                }
            }
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            let v = t.antisym(p, q, r, s);
                            if v == 0.0 {
                                continue;
                            }
                            let Some((s1, f1)) = apply(col, r, false) else { continue };
                            let Some((s2, f2)) = apply(s1, s, false) else { continue };
                            let Some((s3, f3)) = apply(s2, q, true) else { continue };
                            let Some((s4, f4)) = apply(s3, p, true) else { continue };
                            m[(s4 as usize, col as usize)] += 0.25 * v * f1 * f2 * f3 * f4;
                        }
                    }
                }
            }
        }
        m
    }

    fn h2_tables() -> SpinOrbitalHamiltonian {
        let g = build_h_chain(&[0.7414]).unwrap();
        let ints = compute_integrals(&g, "sto-3g").unwrap();
        let scf = hartree_fock(&ints, 2, &ScfOptions::default()).unwrap();
        second_quantized_hamiltonian(&ints, &scf.coefficients).unwrap()
    }

    #[test]
    fn h2_matches_fermionic_enumeration() {
        let t = h2_tables();
        let h = jordan_wigner(&t).unwrap();
        assert_eq!(h.n_qubits(), 4);
        let reference = fermionic_dense(&t);

        let dense = dense_of_sum(&h);
        assert!((dense.map(|c| c.re) - &reference).abs().max() < 1e-12);
        assert!(dense.map(|c| c.im).abs().max() < 1e-12);

        // Pauli decomposition of the enumerated matrix by traces over all 4^4 strings.
        let mut count = 0;
        for x in 0..16u64 {
            for z in 0..16u64 {
                let p = PauliString::from_masks(4, x, z).unwrap();
                let c = (dense_of_string(&p).map(|v| v.conj()).transpose()
                    * reference.map(|v| C64::new(v, 0.0)))
                .trace()
                    / 16.0;
                if c.norm() > 1e-10 {
                    count += 1;
                    assert!((h.coefficient(&p) - c).norm() < 1e-12);
                }
            }
        }
        assert_eq!(count, h.len());
        assert_eq!(count, 15);
    }

    #[test]
    fn h4_commutes_with_number_and_spin() {
        let g = build_h_chain(&[2.0, 2.0, 2.0]).unwrap();
        let ints = compute_integrals(&g, "sto-3g").unwrap();
        let scf = hartree_fock(&ints, 4, &ScfOptions::default()).unwrap();
        let t = second_quantized_hamiltonian(&ints, &scf.coefficients).unwrap();
        let h = jordan_wigner(&t).unwrap();
        assert_eq!(h.n_qubits(), 8);
        assert!(h.is_hermitian(1e-12));
        let dh = dense_of_sum(&h);
        for op in [number_operator(8), sz_operator(4)] {
            let d = dense_of_sum(&op);
            let comm = &dh * &d - &d * &dh;
            assert!(cmax(&comm) < 1e-10);
        }
    }
}
