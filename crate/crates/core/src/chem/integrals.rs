//! Closed-form integrals over contracted s-type Gaussians.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::geometry::{Element, Geometry};
use crate::error::{Error, Result};

/// STO-3G hydrogen 1s: (exponent, contraction coefficient).
const STO3G_H: [(f64, f64); 3] = [
    (3.42525091, 0.15432897),
    (0.62391373, 0.53532814),
    (0.16885540, 0.44463454),
];

/// One- and two-electron integrals over an orbital basis.
///
/// `two_body` holds `(pq|rs)` in chemists' notation, row-major over `n^4`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralSet {
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    pub core_energy: f64,
    pub overlap: DMatrix<f64>,
    pub one_body: DMatrix<f64>,
    pub two_body: Vec<f64>,
}

#[inline]
pub fn eri_index(n: usize, p: usize, q: usize, r: usize, s: usize) -> usize {
    ((p * n + q) * n + r) * n + s
}

impl IntegralSet {
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.two_body[eri_index(self.n_orbitals, p, q, r, s)]
    }

    /// Largest violation of the 8-fold permutational symmetry and of `h_pq = h_qp`.
    pub fn symmetry_violation(&self) -> f64 {
        let n = self.n_orbitals;
        let mut worst = (&self.one_body - self.one_body.transpose()).abs().max();
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.eri(p, q, r, s);
                        for w in [
                            self.eri(q, p, r, s),
                            self.eri(p, q, s, r),
                            self.eri(q, p, s, r),
                            self.eri(r, s, p, q),
                            self.eri(s, r, p, q),
                            self.eri(r, s, q, p),
                            self.eri(s, r, q, p),
                        ] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

#[derive(Clone, Debug)]
struct Primitive {
    alpha: f64,
    coeff: f64,
}

#[derive(Clone, Debug)]
struct SShell {
    center: [f64; 3],
    prims: Vec<Primitive>,
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn weighted(a: &[f64; 3], wa: f64, b: &[f64; 3], wb: f64) -> [f64; 3] {
    let w = wa + wb;
    [
        (wa * a[0] + wb * b[0]) / w,
        (wa * a[1] + wb * b[1]) / w,
        (wa * a[2] + wb * b[2]) / w,
    ]
}

/// Zeroth-order Boys function `F0(t) = ∫_0^1 exp(-t u²) du`.
pub fn boys0(t: f64) -> f64 {
    if t < 1e-8 {
        1.0 - t / 3.0
    } else {
        0.5 * (PI / t).sqrt() * libm::erf(t.sqrt())
    }
}

fn prim_overlap(a: f64, b: f64, r2: f64) -> f64 {
    let p = a + b;
    (PI / p).powf(1.5) * (-a * b / p * r2).exp()
}

fn prim_kinetic(a: f64, b: f64, r2: f64) -> f64 {
    let p = a + b;
    let mu = a * b / p;
    mu * (3.0 - 2.0 * mu * r2) * prim_overlap(a, b, r2)
}

fn prim_nuclear(a: f64, ca: &[f64; 3], b: f64, cb: &[f64; 3], nuc: &[f64; 3], z: f64) -> f64 {
    let p = a + b;
    let pc = weighted(ca, a, cb, b);
    -z * 2.0 * PI / p * (-a * b / p * dist2(ca, cb)).exp() * boys0(p * dist2(&pc, nuc))
}

#[allow(clippy::too_many_arguments)]
fn prim_eri(
    a: f64,
    ca: &[f64; 3],
    b: f64,
    cb: &[f64; 3],
    c: f64,
    cc: &[f64; 3],
    d: f64,
    cd: &[f64; 3],
) -> f64 {
    let p = a + b;
    let q = c + d;
    let pc = weighted(ca, a, cb, b);
    let qc = weighted(cc, c, cd, d);
    2.0 * PI.powf(2.5) / (p * q * (p + q).sqrt())
        * (-a * b / p * dist2(ca, cb) - c * d / q * dist2(cc, cd)).exp()
        * boys0(p * q / (p + q) * dist2(&pc, &qc))
}

fn build_shells(g: &Geometry, basis: &str) -> Result<Vec<SShell>> {
    if !basis.eq_ignore_ascii_case("sto-3g") {
        return Err(Error::Unsupported(format!("basis {basis:?}")));
    }
    let pos = g.positions_bohr();
    let mut shells = Vec::new();
    for (atom, center) in g.atoms.iter().zip(pos) {
        if atom.element != Element::H {
            return Err(Error::Unsupported(format!(
                "element {} (built-in integrals cover hydrogen only)",
                atom.element
            )));
        }
        let mut prims: Vec<Primitive> = STO3G_H
            .iter()
            .map(|&(alpha, c)| Primitive {
                alpha,
                coeff: c * (2.0 * alpha / PI).powf(0.75),
            })
            .collect();
        // Renormalize the contraction to unit self-overlap.
        let mut s = 0.0;
        for pa in &prims {
            for pb in &prims {
                s += pa.coeff * pb.coeff * prim_overlap(pa.alpha, pb.alpha, 0.0);
            }
        }
        for p in &mut prims {
            p.coeff /= s.sqrt();
        }
        shells.push(SShell { center, prims });
    }
    Ok(shells)
}

/// Integrals in the atomic-orbital basis for `basis` (only STO-3G hydrogen is built in).
pub fn compute_integrals(g: &Geometry, basis: &str) -> Result<IntegralSet> {
    let shells = build_shells(g, basis)?;
    let n = shells.len();
    let nuclei: Vec<([f64; 3], f64)> = g
        .positions_bohr()
        .into_iter()
        .zip(&g.atoms)
        .map(|(p, a)| (p, a.element.nuclear_charge() as f64))
        .collect();

    let mut overlap = DMatrix::zeros(n, n);
    let mut one_body = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (si, sj) = (&shells[i], &shells[j]);
            let r2 = dist2(&si.center, &sj.center);
            let (mut s, mut t, mut v) = (0.0, 0.0, 0.0);
            for pa in &si.prims {
                for pb in &sj.prims {
                    let w = pa.coeff * pb.coeff;
                    s += w * prim_overlap(pa.alpha, pb.alpha, r2);
                    t += w * prim_kinetic(pa.alpha, pb.alpha, r2);
                    for (c, z) in &nuclei {
                        v += w * prim_nuclear(pa.alpha, &si.center, pb.alpha, &sj.center, c, *z);
                    }
                }
            }
            overlap[(i, j)] = s;
            one_body[(i, j)] = t + v;
        }
    }

    let two_body: Vec<f64> = (0..n * n * n * n)
        .into_par_iter()
        .map(|idx| {
            let (p, q, r, s) = (idx / (n * n * n), (idx / (n * n)) % n, (idx / n) % n, idx % n);
            let (a, b, c, d) = (&shells[p], &shells[q], &shells[r], &shells[s]);
            let mut v = 0.0;
            for pa in &a.prims {
                for pb in &b.prims {
                    for pc in &c.prims {
                        for pd in &d.prims {
                            v += pa.coeff
                                * pb.coeff
                                * pc.coeff
                                * pd.coeff
                                * prim_eri(
                                    pa.alpha, &a.center, pb.alpha, &b.center, pc.alpha,
                                    &c.center, pd.alpha, &d.center,
                                );
                        }
                    }
                }
            }
            v
        })
        .collect();

    Ok(IntegralSet {
        n_orbitals: n,
        n_electrons: g.n_electrons(),
        ms2: 0,
        core_energy: g.nuclear_repulsion(),
        overlap,
        one_body,
        two_body,
    })
}
