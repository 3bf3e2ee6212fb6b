//! Readout-error mitigation by inverting a tensored, symmetric per-bit flip channel.
//!
//! The inverse of one bit's channel has entries `(p − δ_ij)/(2p − 1)`, so the full
//! inverse element between outcomes `i` and `j` is `a^(n−d) · b^d` with `d` their
//! Hamming distance, `a = (1−p)/(1−2p)` and `b = −p/(1−2p)`. The sum runs over the
//! observed outcomes only, which keeps the cost quadratic in the support size rather
//! than in `2^n`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sim::CountTable;

/// Supports at least this large are processed in parallel.
const PARALLEL_SUPPORT: usize = 512;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MitigationConfig {
    p: f64,
}

impl MitigationConfig {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::invalid(format!(
                "flip probability {p} outside [0, 0.5): the channel is not invertible"
            )));
        }
        Ok(MitigationConfig { p })
    }

    pub fn flip_probability(&self) -> f64 {
        self.p
    }

    /// Diagonal and off-diagonal entries of one bit's inverse channel.
    fn inverse_entries(&self) -> (f64, f64) {
        let d = 1.0 - 2.0 * self.p;
        ((1.0 - self.p) / d, -self.p / d)
    }
}

/// Mitigated probabilities over the observed outcomes of `counts`.
pub fn mitigate(counts: &CountTable, cfg: &MitigationConfig) -> Result<BTreeMap<u64, f64>> {
    if counts.shots() == 0 {
        return Err(Error::EmptyCounts);
    }
    mitigate_distribution(&counts.probabilities(), counts.n_bits(), cfg)
}

/// Same as [`mitigate`] for an explicit distribution; zero entries are outside the support.
pub fn mitigate_distribution(
    probabilities: &BTreeMap<u64, f64>,
    n_bits: usize,
    cfg: &MitigationConfig,
) -> Result<BTreeMap<u64, f64>> {
    let support: Vec<(u64, f64)> = probabilities
        .iter()
        .filter(|(_, &p)| p != 0.0)
        .map(|(&b, &p)| (b, p))
        .collect();
    if support.is_empty() {
        return Err(Error::EmptyCounts);
    }
    if let Some(&(b, _)) = support.iter().find(|(b, _)| n_bits < 64 && b >> n_bits != 0) {
        return Err(Error::invalid(format!("outcome {b:#x} does not fit in {n_bits} bits")));
    }
    if support.iter().any(|(_, p)| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid("probabilities must be finite and non-negative"));
    }
    if cfg.p == 0.0 {
        let total: f64 = support.iter().map(|s| s.1).sum();
        return Ok(support.into_iter().map(|(b, p)| (b, p / total)).collect());
    }

    let (a, b) = cfg.inverse_entries();
    let ratio = b / a;
    let scale = a.powi(n_bits as i32);
    let row = |&(i, _): &(u64, f64)| -> (u64, f64) {
        let v: f64 = support
            .iter()
            .map(|&(j, pj)| ratio.powi((i ^ j).count_ones() as i32) * pj)
            .sum();
        (i, (scale * v).max(0.0))
    };
    let raw: Vec<(u64, f64)> = if support.len() >= PARALLEL_SUPPORT {
        support.par_iter().map(row).collect()
    } else {
        support.iter().map(row).collect()
    };

    let total: f64 = raw.iter().map(|r| r.1).sum();
    if total <= 0.0 {
        return Err(Error::invalid("mitigation removed all probability mass"));
    }
    Ok(raw.into_iter().map(|(i, v)| (i, v / total)).collect())
}
