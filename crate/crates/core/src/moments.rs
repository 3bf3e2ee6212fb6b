//! Hamiltonian powers as Pauli sums, moments `<φ|Hⁿ|φ>`, and the running set of distinct
//! strings that must be measured to obtain them.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, C64};
use crate::sim::{apply_sum, inner, StateVector};

pub const DEFAULT_TERM_BUDGET: usize = 10_000_000;

/// Powers of `H − c·I` computed on demand and kept for reuse.
///
/// Moments are taken about a fixed energy `c`, by default the identity coefficient of
/// `H` (its spectral centre). Subtracting it leaves the non-identity strings of every
/// power unchanged as a set, and keeps moment matrices far better conditioned than raw
/// powers of an operator whose spectrum sits well away from zero.
#[derive(Clone, Debug)]
pub struct PowerCache {
    hamiltonian: PauliSum,
    shift: f64,
    powers: Vec<PauliSum>,
    budget: usize,
}

impl PowerCache {
    /// Centered cache with the default term budget.
    pub fn new(h: &PauliSum) -> Self {
        let centre = h.coefficient(&PauliString::identity(h.n_qubits())).re;
        PowerCache::with_shift(h, centre, DEFAULT_TERM_BUDGET)
    }

    /// Cache of plain powers `Hⁿ`.
    pub fn unshifted(h: &PauliSum) -> Self {
        PowerCache::with_shift(h, 0.0, DEFAULT_TERM_BUDGET)
    }

    pub fn with_shift(h: &PauliSum, shift: f64, budget: usize) -> Self {
        let one = PauliSum::identity(h.n_qubits()).with_tolerance(h.tolerance());
        let base = if shift == 0.0 {
            h.clone()
        } else {
            let mut b = h.clone();
            b.add_term(PauliString::identity(h.n_qubits()), C64::new(-shift, 0.0))
                .expect("same register");
            b.prune();
            b
        };
        PowerCache {
            hamiltonian: h.clone(),
            shift,
            powers: vec![one, base],
            budget,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.hamiltonian
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Highest power held so far.
    pub fn computed(&self) -> usize {
        self.powers.len() - 1
    }

    /// `(H − c)ⁿ`.
    pub fn power(&mut self, n: usize) -> Result<&PauliSum> {
        while self.powers.len() <= n {
            let k = self.powers.len();
            let next = self.powers[k - 1].multiply(&self.powers[1])?;
            // Powers of a Hermitian operator are Hermitian; any imaginary part is
            // accumulated rounding.
            let next = if self.powers[1].is_hermitian(0.0) { next.real_part() } else { next };
            if next.len() > self.budget {
                return Err(Error::TermBudget {
                    power: k,
                    budget: self.budget,
                });
            }
            self.powers.push(next);
        }
        Ok(&self.powers[n])
    }
}

/// `Hⁿ` through an unshifted cache.
pub fn hamiltonian_power(h: &PauliSum, n: usize, cache: &mut PowerCache) -> Result<PauliSum> {
    if cache.hamiltonian() != h {
        return Err(Error::invalid("power cache belongs to a different operator"));
    }
    if cache.shift() != 0.0 {
        return Err(Error::invalid("power cache holds shifted powers"));
    }
    cache.power(n).cloned()
}

/// `Hⁿ` by binary exponentiation, independent of any cache.
pub fn power_by_squaring(h: &PauliSum, mut n: usize) -> Result<PauliSum> {
    let mut result = PauliSum::identity(h.n_qubits()).with_tolerance(h.tolerance());
    let mut base = h.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = result.multiply(&base)?;
        }
        n >>= 1;
        if n > 0 {
            base = base.multiply(&base)?;
        }
    }
    Ok(result)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub k: usize,
    /// Energy the moments are taken about.
    pub shift: f64,
    /// `<(H − shift)ⁿ>` for `n = 0..2K`.
    pub values: Vec<f64>,
    /// Non-identity strings of each power, indexed by power.
    pub per_power_strings: Vec<BTreeSet<PauliString>>,
    pub unique_strings: BTreeSet<PauliString>,
}

impl MomentTable {
    /// Highest power entering a `K`-th order system.
    pub fn max_power(k: usize) -> usize {
        2 * k - 1
    }

    /// `<H>`.
    pub fn mean_energy(&self) -> f64 {
        self.values.get(1).map_or(f64::NAN, |v| v + self.shift)
    }

    /// Cumulative distinct-string counts, entry `n` covering powers `1..=n`.
    pub fn cumulative_counts(&self) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        self.per_power_strings
            .iter()
            .map(|set| {
                seen.extend(set.iter().copied());
                seen.len()
            })
            .collect()
    }

    /// CSV rows `power,cumulative_unique,moment_value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("power,cumulative_unique,moment_value\n");
        for (n, (count, v)) in self.cumulative_counts().iter().zip(&self.values).enumerate() {
            let _ = writeln!(out, "{n},{count},{v:.15e}");
        }
        out
    }
}

fn non_identity(s: &PauliSum) -> BTreeSet<PauliString> {
    s.strings().filter(|p| !p.is_identity()).copied().collect()
}

/// Moments up to power `2K−1` about the cache's shift.
///
/// Values come from the Krylov chain `v_m = (H − c)^m |φ>` with
/// `<(H − c)^{2m}> = <v_m|v_m>` and `<(H − c)^{2m+1}> = <v_m|v_{m+1}>`. Contracting the
/// Pauli-sum powers gives the same numbers, but their coefficients cancel heavily at high
/// order and lose several digits; the chain keeps errors near machine precision. The
/// string ledger still comes from the Pauli-sum powers.
pub fn moments_for_state(cache: &mut PowerCache, state: &StateVector, k: usize) -> Result<MomentTable> {
    if k == 0 {
        return Err(Error::invalid("expansion order must be at least 1"));
    }
    let n_qubits = cache.hamiltonian().n_qubits();
    if state.n_qubits() != n_qubits {
        return Err(Error::QubitMismatch {
            left: n_qubits,
            right: state.n_qubits(),
        });
    }
    let top = MomentTable::max_power(k);
    let mut per_power = Vec::with_capacity(top + 1);
    let mut unique = BTreeSet::new();
    for n in 0..=top {
        let set = non_identity(cache.power(n)?);
        unique.extend(set.iter().copied());
        per_power.push(set);
    }
    let base = cache.power(1)?.clone();
    Ok(MomentTable {
        k,
        shift: cache.shift(),
        values: krylov_moments(&base, state, top),
        per_power_strings: per_power,
        unique_strings: unique,
    })
}

/// `<φ|hⁿ|φ>` for `n = 0..=max_power` from repeated application of `h` to the state.
pub fn krylov_moments(h: &PauliSum, state: &StateVector, max_power: usize) -> Vec<f64> {
    let mut chain = vec![state.amplitudes().to_vec()];
    while 2 * (chain.len() - 1) < max_power {
        let next = apply_sum(h, chain.last().unwrap());
        chain.push(next);
    }
    (0..=max_power)
        .map(|n| {
            let m = n / 2;
            if n % 2 == 0 {
                inner(&chain[m], &chain[m]).re
            } else {
                inner(&chain[m], &chain[m + 1]).re
            }
        })
        .collect()
}

/// `<φ|(H − c)ⁿ|φ>` by contracting each cached Pauli-sum power with the state.
pub fn pauli_moments(cache: &mut PowerCache, state: &StateVector, max_power: usize) -> Result<Vec<f64>> {
    (0..=max_power)
        .map(|n| Ok(state.expectation_complex(cache.power(n)?)?.re))
        .collect()
}

/// `<φ|Hᵃ Hᵇ|φ>` as the overlap of `Hᵃ|φ>` with `Hᵇ|φ>`.
pub fn pipelined_moment(h: &PauliSum, state: &StateVector, a: usize, b: usize) -> Result<f64> {
    if state.n_qubits() != h.n_qubits() {
        return Err(Error::QubitMismatch {
            left: h.n_qubits(),
            right: state.n_qubits(),
        });
    }
    let mut chain = vec![state.amplitudes().to_vec()];
    for _ in 0..a.max(b) {
        let next = apply_sum(h, chain.last().unwrap());
        chain.push(next);
    }
    Ok(inner(&chain[a], &chain[b]).re)
}

/// Distinct non-identity strings over powers `1..=max_power`.
pub fn unique_strings(cache: &mut PowerCache, max_power: usize) -> Result<BTreeSet<PauliString>> {
    let mut seen = BTreeSet::new();
    for n in 1..=max_power {
        seen.extend(non_identity(cache.power(n)?));
    }
    Ok(seen)
}

/// Cumulative distinct-string counts for powers `0..=max_power` (entry 0 is 0).
pub fn unique_string_count(cache: &mut PowerCache, max_power: usize) -> Result<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(max_power + 1);
    for n in 0..=max_power {
        seen.extend(non_identity(cache.power(n)?));
        out.push(seen.len());
    }
    Ok(out)
}
