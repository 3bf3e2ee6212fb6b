//! Moment-based eigenvalue bounds.
//!
//! For order `K`, the coefficients `X` of the monic polynomial
//! `P(E) = E^K + X_1 E^{K-1} + … + X_K` solve `M X = −Y` with
//! `M_ij = <H^{2K−i−j}>` and `Y_i = <H^{2K−i}>` (`i, j = 1..K`). The roots of `P` are
//! upper bounds to the lowest `K` eigenvalues supported by the trial state.
//!
//! Moments may be taken about any fixed energy `c` (moments of `H − c`); the roots are
//! then shifted back by `c`. When fewer than `K` singular values of `M` survive the
//! cutoff, the trial state only resolves that many levels and the system is re-solved at
//! the reduced order, so no arbitrary roots from the null space leak into the result.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::moments::{moments_for_state, MomentTable, PowerCache};
use crate::sim::StateVector;
use crate::units::HARTREE_TO_EV;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PdsOptions {
    /// Singular values below this fraction of the largest are discarded.
    pub svd_cutoff: f64,
    /// Largest imaginary part (hartree) silently projected to the real axis.
    pub imaginary_tolerance: f64,
}

impl Default for PdsOptions {
    fn default() -> Self {
        PdsOptions {
            svd_cutoff: 1e-12,
            imaginary_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSystem {
    pub k: usize,
    pub m: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    /// Largest over smallest retained singular value.
    pub condition_estimate: f64,
    pub retained_rank: usize,
}

impl MomentSystem {
    /// `‖M X + Y‖ / ‖Y‖`.
    pub fn relative_residual(&self) -> f64 {
        (&self.m * &self.x + &self.y).norm() / self.y.norm().max(f64::MIN_POSITIVE)
    }
}

/// Assemble and solve the order-`k` system from moments `values[n] = <Hⁿ>`.
pub fn build_system(values: &[f64], k: usize, opts: &PdsOptions) -> Result<MomentSystem> {
    if k == 0 {
        return Err(Error::invalid("expansion order must be at least 1"));
    }
    if values.len() < 2 * k {
        return Err(Error::invalid(format!(
            "order {k} needs moments up to power {}, got {}",
            2 * k - 1,
            values.len().saturating_sub(1)
        )));
    }
    if let Some(v) = values[..2 * k].iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite moment {v}")));
    }
    // Zero-based: M[i][j] = <H^{2K-2-i-j}>, Y[i] = <H^{2K-1-i}>.
    let m = DMatrix::from_fn(k, k, |i, j| values[2 * k - 2 - i - j]);
    let y = DVector::from_fn(k, |i, _| values[2 * k - 1 - i]);

    let svd = m.clone().svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let s_max = svd.singular_values.max();
    let floor = s_max * opts.svd_cutoff;
    let rhs = u.transpose() * (-&y);
    let mut x = DVector::zeros(k);
    let mut s_min_kept = f64::INFINITY;
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > floor && s > 0.0 {
            x += v_t.row(i).transpose() * (rhs[i] / s);
            s_min_kept = s_min_kept.min(s);
            rank += 1;
        }
    }
    if rank == 0 {
        return Err(Error::RankCollapse);
    }
    Ok(MomentSystem {
        k,
        m,
        y,
        x,
        condition_estimate: s_max / s_min_kept,
        retained_rank: rank,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdsResult {
    /// Order actually solved; below the requested order when `M` is rank deficient.
    pub order: usize,
    /// Ascending.
    pub roots: Vec<f64>,
    /// `|P(root)|` per root.
    pub residuals: Vec<f64>,
    /// Largest imaginary part dropped when projecting roots to the real axis.
    pub discarded_imaginary: f64,
    /// Quadrature weight per root: the share of the trial state the root stands for.
    /// Empty when the roots did not come from moments.
    pub weights: Vec<f64>,
}

impl PdsResult {
    pub fn ground(&self) -> f64 {
        self.roots[0]
    }

    /// Roots whose weight exceeds `floor`. Noisy moments can add roots that reproduce
    /// the moments with vanishing or negative weight; no spectral measure has those.
    pub fn supported_roots(&self, floor: f64) -> Vec<f64> {
        if self.weights.is_empty() {
            return self.roots.clone();
        }
        self.roots
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > floor)
            .map(|(&r, _)| r)
            .collect()
    }
}

/// Weights `w` with `Σ_i w_i r_iⁿ = values[n]` for `n < K`: the Gauss quadrature that the
/// roots `r` (about the shift) define for the moment sequence.
fn quadrature_weights(values: &[f64], centred_roots: &[f64]) -> Vec<f64> {
    let k = centred_roots.len();
    let v = DMatrix::from_fn(k, k, |n, i| centred_roots[i].powi(n as i32));
    let rhs = DVector::from_fn(k, |n, _| values[n]);
    match v.lu().solve(&rhs) {
        Some(w) => w.iter().copied().collect(),
        None => vec![f64::NAN; k],
    }
}

fn eval_monic(x: &[f64], e: f64) -> f64 {
    x.iter().fold(1.0, |acc, c| acc * e + c)
}

/// Roots of `E^K + Σ X_i E^{K−i}` from the companion matrix spectrum.
pub fn polynomial_roots(x: &[f64], opts: &PdsOptions) -> Result<PdsResult> {
    let k = x.len();
    if k == 0 {
        return Err(Error::invalid("empty coefficient vector"));
    }
    if let Some(c) = x.iter().find(|c| !c.is_finite()) {
        return Err(Error::invalid(format!("non-finite coefficient {c}")));
    }
    let mut companion = DMatrix::zeros(k, k);
    for j in 0..k {
        companion[(0, j)] = -x[j];
    }
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    let eig = companion.complex_eigenvalues();
    let mut roots = Vec::with_capacity(k);
    let mut discarded: f64 = 0.0;
    for z in eig.iter() {
        if z.im.abs() > opts.imaginary_tolerance {
            return Err(Error::ComplexRoot {
                re: z.re,
                im: z.im,
                tolerance: opts.imaginary_tolerance,
            });
        }
        discarded = discarded.max(z.im.abs());
        roots.push(z.re);
    }
    roots.sort_by(f64::total_cmp);
    let residuals = roots.iter().map(|&r| eval_monic(x, r).abs()).collect();
    Ok(PdsResult {
        order: k,
        roots,
        residuals,
        discarded_imaginary: discarded,
        weights: Vec::new(),
    })
}

/// Bounds from moments about `shift` (`values[n] = <(H − shift)ⁿ>`, `n = 0..2K`).
pub fn pds_from_moments(values: &[f64], shift: f64, k: usize, opts: &PdsOptions) -> Result<PdsResult> {
    let mut order = k;
    let system = loop {
        let system = build_system(values, order, opts)?;
        if system.retained_rank == order {
            break system;
        }
        order = system.retained_rank;
    };
    let mut result = polynomial_roots(system.x.as_slice(), opts)?;
    result.weights = quadrature_weights(values, &result.roots);
    for r in &mut result.roots {
        *r += shift;
    }
    Ok(result)
}

/// Order-`k` bounds from a moment table.
pub fn pds_from_table(table: &MomentTable, k: usize, opts: &PdsOptions) -> Result<PdsResult> {
    pds_from_moments(&table.values, table.shift, k, opts)
}

/// Moments of `state` under the cached operator, then the order-`k` roots.
pub fn pds_energies(cache: &mut PowerCache, state: &StateVector, k: usize, opts: &PdsOptions) -> Result<PdsResult> {
    let table = moments_for_state(cache, state, k)?;
    pds_from_table(&table, k, opts)
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Transitions {
    /// Lowest singlet excitation, eV.
    pub s0_s1: f64,
    /// Singlet–triplet gap, eV.
    pub s0_t0: f64,
    /// `s0_s1 / (2 s0_t0)`; near 1 when fission is energetically balanced.
    pub fission_ratio: f64,
}

pub fn transition_energies(singlet: &PdsResult, triplet: &PdsResult) -> Result<Transitions> {
    if singlet.roots.len() < 2 {
        return Err(Error::InsufficientLevels(
            "the singlet result needs at least two roots".into(),
        ));
    }
    let triplet_ground = *triplet
        .roots
        .first()
        .ok_or_else(|| Error::InsufficientLevels("empty triplet result".into()))?;
    Ok(transitions_from_levels(singlet.roots[0], singlet.roots[1], triplet_ground))
}

pub(crate) fn transitions_from_levels(s0: f64, s1: f64, t0: f64) -> Transitions {
    let s0_s1 = (s1 - s0) * HARTREE_TO_EV;
    let s0_t0 = (t0 - s0) * HARTREE_TO_EV;
    Transitions {
        s0_s1,
        s0_t0,
        fission_ratio: s0_s1 / (2.0 * s0_t0),
    }
}
