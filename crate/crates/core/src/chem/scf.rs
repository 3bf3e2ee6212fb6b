//! Restricted closed-shell Hartree–Fock with DIIS extrapolation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::integrals::IntegralSet;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ScfOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the largest density-matrix element change.
    pub density_tolerance: f64,
    pub diis_size: usize,
}

impl Default for ScfOptions {
    fn default() -> Self {
        ScfOptions {
            max_iterations: 200,
            density_tolerance: 1e-10,
            diis_size: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScfResult {
    /// Columns are molecular orbitals in ascending energy order.
    pub coefficients: DMatrix<f64>,
    pub orbital_energies: Vec<f64>,
    /// Total energy including `core_energy`.
    pub energy: f64,
    pub iterations: usize,
}

/// Eigenpairs sorted ascending, each eigenvector with its first sizeable entry positive.
pub(crate) fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8) {
            if *first < 0.0 {
                v = -v;
            }
        }
        vecs.set_column(col, &v);
    }
    (values, vecs)
}

fn symmetric_orthogonalizer(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sorted_eigen(s.clone());
    if vals[0] < 1e-10 {
        return Err(Error::invalid(format!(
            "overlap matrix is singular (smallest eigenvalue {:e})",
            vals[0]
        )));
    }
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| 1.0 / v.sqrt()),
    ));
    Ok(&vecs * inv_sqrt * vecs.transpose())
}

fn fock(ints: &IntegralSet, density: &DMatrix<f64>) -> DMatrix<f64> {
    let n = ints.n_orbitals;
    let mut f = ints.one_body.clone();
    for p in 0..n {
        for q in 0..n {
            let mut g = 0.0;
            for r in 0..n {
                for s in 0..n {
                    g += density[(r, s)] * (ints.eri(p, q, r, s) - 0.5 * ints.eri(p, r, q, s));
                }
            }
            f[(p, q)] += g;
        }
    }
    f
}

fn density_of(c: &DMatrix<f64>, n_occ: usize) -> DMatrix<f64> {
    let occ = c.columns(0, n_occ);
    occ * occ.transpose() * 2.0
}

fn diis_extrapolate(focks: &[DMatrix<f64>], errors: &[DMatrix<f64>]) -> Option<DMatrix<f64>> {
    let m = focks.len();
    let mut b = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] = errors[i].dot(&errors[j]);
        }
        b[(i, m)] = -1.0;
        b[(m, i)] = -1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[m] = -1.0;
    let coeffs = b.lu().solve(&rhs)?;
    if coeffs.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let mut f = DMatrix::zeros(focks[0].nrows(), focks[0].ncols());
    for (k, fk) in focks.iter().enumerate() {
        f += fk * coeffs[k];
    }
    Some(f)
}

/// Restricted Hartree–Fock from a core-Hamiltonian guess.
pub fn hartree_fock(ints: &IntegralSet, n_electrons: usize, opts: &ScfOptions) -> Result<ScfResult> {
    if n_electrons % 2 != 0 {
        return Err(Error::invalid(format!(
            "restricted closed-shell SCF needs an even electron count, got {n_electrons}"
        )));
    }
    let n_occ = n_electrons / 2;
    if n_occ > ints.n_orbitals {
        return Err(Error::invalid(format!(
            "{n_electrons} electrons do not fit in {} orbitals",
            ints.n_orbitals
        )));
    }
    let x = symmetric_orthogonalizer(&ints.overlap)?;
    let solve = |f: &DMatrix<f64>| {
        let fp = x.transpose() * f * &x;
        let (e, cp) = sorted_eigen(fp);
        (e, &x * cp)
    };

    let (_, c_guess) = solve(&ints.one_body);
    let mut density = density_of(&c_guess, n_occ);
    let mut focks: Vec<DMatrix<f64>> = Vec::new();
    let mut errors: Vec<DMatrix<f64>> = Vec::new();
    let mut delta = f64::INFINITY;

    for iter in 1..=opts.max_iterations {
        let f = fock(ints, &density);
        let err = &f * &density * &ints.overlap - &ints.overlap * &density * &f;
        focks.push(f.clone());
        errors.push(x.transpose() * err * &x);
        if focks.len() > opts.diis_size {
            focks.remove(0);
            errors.remove(0);
        }
        let f_use = if focks.len() >= 2 {
            diis_extrapolate(&focks, &errors).unwrap_or(f)
        } else {
            f
        };
        let (_, c_new) = solve(&f_use);
        let d_new = density_of(&c_new, n_occ);
        delta = (&d_new - &density).abs().max();
        density = d_new;
        if delta < opts.density_tolerance {
            // Final orbitals from the plain Fock matrix of the converged density.
            let (e_fin, c_fin) = solve(&fock(ints, &density));
            let density = density_of(&c_fin, n_occ);
            let f = fock(ints, &density);
            let energy = 0.5 * density.dot(&(&ints.one_body + &f)) + ints.core_energy;
            return Ok(ScfResult {
                coefficients: c_fin,
                orbital_energies: e_fin,
                energy,
                iterations: iter,
            });
        }
    }
    Err(Error::ScfNotConverged {
        iterations: opts.max_iterations,
        delta,
    })
}
