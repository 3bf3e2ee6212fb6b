use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::Complex;
use rayon::prelude::*;

use super::string::PauliString;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default absolute threshold below which coefficients are discarded.
pub const DEFAULT_DROP_TOLERANCE: f64 = 1e-12;

/// Left-hand term count above which products are split across threads.
const PARALLEL_CHUNK: usize = 256;

/// Sparse complex-weighted sum of Pauli strings on a fixed register.
///
/// Terms are kept in canonical `(z_mask, x_mask)` order so iteration, text output and
/// anything derived from it is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, C64>,
    tolerance: f64,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
            tolerance: DEFAULT_DROP_TOLERANCE,
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let mut s = PauliSum::zero(n_qubits);
        s.terms
            .insert(PauliString::identity(n_qubits), C64::new(1.0, 0.0));
        s
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (PauliString, C64)>,
    ) -> Result<Self> {
        let mut s = PauliSum::zero(n_qubits);
        for (p, c) in terms {
            s.add_term(p, c)?;
        }
        s.prune();
        Ok(s)
    }

    pub fn from_real_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (PauliString, f64)>,
    ) -> Result<Self> {
        PauliSum::from_terms(
            n_qubits,
            terms.into_iter().map(|(p, c)| (p, C64::new(c, 0.0))),
        )
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.prune();
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &C64)> {
        self.terms.iter()
    }

    pub fn strings(&self) -> impl Iterator<Item = &PauliString> {
        self.terms.keys()
    }

    pub fn coefficient(&self, p: &PauliString) -> C64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    /// Accumulate `c * p` without pruning.
    pub fn add_term(&mut self, p: PauliString, c: C64) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: p.n_qubits(),
            });
        }
        *self.terms.entry(p).or_default() += c;
        Ok(())
    }

    pub fn prune(&mut self) {
        let tol = self.tolerance;
        self.terms.retain(|_, c| c.norm() >= tol);
    }

    fn check(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check(other)?;
        let mut out = self.clone();
        for (p, c) in other.iter() {
            *out.terms.entry(*p).or_default() += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn scale(&self, factor: C64) -> PauliSum {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out.prune();
        out
    }

    /// Operator product `self * other`, merged and pruned.
    ///
    /// Large products are split over fixed-size chunks of the left operand and the
    /// partial maps merged in chunk order, so the floating-point result does not depend
    /// on thread scheduling.
    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check(other)?;
        let left: Vec<(&PauliString, &C64)> = self.terms.iter().collect();
        let right: Vec<(&PauliString, &C64)> = other.terms.iter().collect();

        let partial = |chunk: &[(&PauliString, &C64)]| {
            let mut acc: HashMap<PauliString, C64> = HashMap::new();
            for (pa, ca) in chunk {
                for (pb, cb) in &right {
                    let (p, ph) = pa.mul_unchecked(pb);
                    *acc.entry(p).or_default() += **ca * **cb * ph.to_complex();
                }
            }
            acc
        };

        let chunks: Vec<HashMap<PauliString, C64>> = if left.len() * right.len() > 1 << 16 {
            left.par_chunks(PARALLEL_CHUNK).map(partial).collect()
        } else {
            left.chunks(PARALLEL_CHUNK).map(partial).collect()
        };

        let mut merged: HashMap<PauliString, C64> = HashMap::new();
        for chunk in chunks {
            // Sorted merge keeps the summation order independent of hash iteration order.
            let mut entries: Vec<_> = chunk.into_iter().collect();
            entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            for (p, c) in entries {
                *merged.entry(p).or_default() += c;
            }
        }
        let tol = self.tolerance.min(other.tolerance);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms: merged.into_iter().filter(|(_, c)| c.norm() >= tol).collect(),
            tolerance: tol,
        })
    }

    /// Largest imaginary part over all coefficients.
    pub fn max_imaginary(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imaginary() <= tol
    }

    /// Discard imaginary parts. Meaningful for operators known to be Hermitian, where
    /// those parts are rounding residue.
    pub fn real_part(&self) -> PauliSum {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            c.im = 0.0;
        }
        out.prune();
        out
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn map_strings(
        &self,
        n_qubits: usize,
        mut f: impl FnMut(&PauliString) -> (PauliString, C64),
    ) -> Result<PauliSum> {
        let mut out = PauliSum::zero(n_qubits).with_tolerance(self.tolerance);
        for (p, c) in self.iter() {
            let (q, factor) = f(p);
            out.add_term(q, *c * factor)?;
        }
        out.prune();
        Ok(out)
    }

    /// Parse the text form written by `Display`: one `coeff * LETTERS` term per line.
    pub fn parse(text: &str) -> Result<PauliSum> {
        let mut sum: Option<PauliSum> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i + 1;
            let (coeff, letters) = line.split_once('*').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("expected `coeff * LETTERS`, got {line:?}"),
            })?;
            let c = parse_coefficient(coeff.trim()).ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("bad coefficient {:?}", coeff.trim()),
            })?;
            let p: PauliString = letters.parse().map_err(|e: Error| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let s = sum.get_or_insert_with(|| PauliSum::zero(p.n_qubits()));
            s.add_term(p, c).map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        }
        let mut s = sum.ok_or_else(|| Error::Parse {
            line: 0,
            message: "no terms".into(),
        })?;
        s.prune();
        Ok(s)
    }
}

fn parse_coefficient(s: &str) -> Option<C64> {
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let (re, im) = inner.split_once(',')?;
        return Some(C64::new(re.trim().parse().ok()?, im.trim().parse().ok()?));
    }
    Some(C64::new(s.parse().ok()?, 0.0))
}

impl fmt::Display for PauliSum {
    /// Real coefficients print as plain numbers, complex ones as `(re, im)`; both use
    /// shortest round-trip formatting.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, c) in self.iter() {
            if c.im == 0.0 {
                writeln!(f, "{:?} * {}", c.re, p)?;
            } else {
                writeln!(f, "({:?}, {:?}) * {}", c.re, c.im, p)?;
            }
        }
        Ok(())
    }
}
