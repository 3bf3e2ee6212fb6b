use nalgebra::DMatrix;

use super::integrals::{eri_index, IntegralSet};
use crate::error::{Error, Result};

/// Molecular-orbital Hamiltonian in spatial and spin-orbital form.
///
/// Spin orbitals are blocked: index `p` is spatial orbital `p` with α spin and
/// `p + n_spatial` the same orbital with β spin.
#[derive(Clone, Debug)]
pub struct SpinOrbitalHamiltonian {
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub core_energy: f64,
    /// MO-basis `h_pq`.
    pub mo_one_body: DMatrix<f64>,
    /// MO-basis `(pq|rs)`, chemists' notation.
    pub mo_two_body: Vec<f64>,
    /// Spin-orbital `h_PQ`.
    pub one_body: DMatrix<f64>,
    /// Antisymmetrized `<PQ||RS>` over spin orbitals.
    pub two_body: Vec<f64>,
}

impl SpinOrbitalHamiltonian {
    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_spatial
    }

    /// `<PQ||RS>`.
    pub fn antisym(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.two_body[eri_index(self.n_spin_orbitals(), p, q, r, s)]
    }

    pub fn spatial_eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.mo_two_body[eri_index(self.n_spatial, p, q, r, s)]
    }

    /// Energy of the determinant occupying the listed spin orbitals.
    pub fn determinant_energy(&self, occupied: &[usize]) -> f64 {
        let mut e = self.core_energy;
        for &i in occupied {
            e += self.one_body[(i, i)];
        }
        for &i in occupied {
            for &j in occupied {
                e += 0.5 * self.antisym(i, j, i, j);
            }
        }
        e
    }

    /// MO integrals packaged for export, with an identity overlap.
    pub fn mo_integrals(&self) -> IntegralSet {
        IntegralSet {
            n_orbitals: self.n_spatial,
            n_electrons: self.n_electrons,
            ms2: 0,
            core_energy: self.core_energy,
            overlap: DMatrix::identity(self.n_spatial, self.n_spatial),
            one_body: self.mo_one_body.clone(),
            two_body: self.mo_two_body.clone(),
        }
    }
}

fn transform_two_body(ints: &IntegralSet, c: &DMatrix<f64>) -> Vec<f64> {
    let n = ints.n_orbitals;
    // Quarter transforms, one index at a time.
    let mut cur = ints.two_body.clone();
    for axis in 0..4 {
        let mut next = vec![0.0; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let idx = [p, q, r, s];
                        let mut v = 0.0;
                        for k in 0..n {
                            let mut src = idx;
                            src[axis] = k;
                            v += c[(k, idx[axis])] * cur[eri_index(n, src[0], src[1], src[2], src[3])];
                        }
                        next[eri_index(n, p, q, r, s)] = v;
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Transform `ints` into the orbital basis given by the columns of `coefficients` and
/// expand to antisymmetrized spin-orbital tables.
pub fn second_quantized_hamiltonian(
    ints: &IntegralSet,
    coefficients: &DMatrix<f64>,
) -> Result<SpinOrbitalHamiltonian> {
    let n = ints.n_orbitals;
    if coefficients.nrows() != n || coefficients.ncols() != n {
        return Err(Error::invalid(format!(
            "orbital matrix is {}x{}, integrals have {n} orbitals",
            coefficients.nrows(),
            coefficients.ncols()
        )));
    }
    let mo_one_body = coefficients.transpose() * &ints.one_body * coefficients;
    let mo_two_body = transform_two_body(ints, coefficients);

    let ns = 2 * n;
    let spatial = |p: usize| (p % n, p / n);
    let mut one_body = DMatrix::zeros(ns, ns);
    for p in 0..ns {
        for q in 0..ns {
            let ((pp, sp), (qq, sq)) = (spatial(p), spatial(q));
            if sp == sq {
                one_body[(p, q)] = mo_one_body[(pp, qq)];
            }
        }
    }
    // <PQ|RS> = (pr|qs) δ(σP σR) δ(σQ σS)
    let coulomb = |p: usize, q: usize, r: usize, s: usize| {
        let ((pp, sp), (qq, sq), (rr, sr), (ss, s_s)) = (spatial(p), spatial(q), spatial(r), spatial(s));
        if sp == sr && sq == s_s {
            mo_two_body[eri_index(n, pp, rr, qq, ss)]
        } else {
            0.0
        }
    };
    let mut two_body = vec![0.0; ns * ns * ns * ns];
    for p in 0..ns {
        for q in 0..ns {
            for r in 0..ns {
                for s in 0..ns {
                    two_body[eri_index(ns, p, q, r, s)] = coulomb(p, q, r, s) - coulomb(p, q, s, r);
                }
            }
        }
    }
    Ok(SpinOrbitalHamiltonian {
        n_spatial: n,
        n_electrons: ints.n_electrons,
        core_energy: ints.core_energy,
        mo_one_body,
        mo_two_body,
        one_body,
        two_body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{build_h_chain, compute_integrals, hartree_fock, ScfOptions};

    #[test]
    fn tables_keep_symmetry_and_reproduce_scf_energy() {
        let g = build_h_chain(&[2.0, 2.0, 2.0]).unwrap();
        let ints = compute_integrals(&g, "sto-3g").unwrap();
        let scf = hartree_fock(&ints, 4, &ScfOptions::default()).unwrap();
        let t = second_quantized_hamiltonian(&ints, &scf.coefficients).unwrap();
        assert!(t.mo_integrals().symmetry_violation() < 1e-10);

        let ns = t.n_spin_orbitals();
        let mut worst: f64 = 0.0;
        for p in 0..ns {
            for q in 0..ns {
                for r in 0..ns {
                    for s in 0..ns {
                        let v = t.antisym(p, q, r, s);
                        worst = worst
                            .max((v + t.antisym(q, p, r, s)).abs())
                            .max((v + t.antisym(p, q, s, r)).abs())
                            .max((v - t.antisym(r, s, p, q)).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-10);

        // Fock matrix is diagonal in the canonical MO basis.
        let occ = [0usize, 1, 4, 5];
        let e = t.determinant_energy(&occ);
        assert!((e - scf.energy).abs() < 1e-8, "{e} vs {}", scf.energy);
    }

    #[test]
    fn dimension_mismatch() {
        let g = build_h_chain(&[1.0]).unwrap();
        let ints = compute_integrals(&g, "sto-3g").unwrap();
        assert!(second_quantized_hamiltonian(&ints, &DMatrix::identity(3, 3)).is_err());
    }
}
