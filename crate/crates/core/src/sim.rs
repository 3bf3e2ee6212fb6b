//! Statevector engine and shot sampler for basis-state preparation, single-qubit basis
//! changes and readout with symmetric bit-flip noise.
//!
//! Qubit `k` is bit `k` of an amplitude index. Serialized bitstrings put qubit 0 first.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::Complex;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{rotation_circuit, BasisChange, PackedBatch, QwcGroup};
use crate::pauli::{PauliString, PauliSum, C64};

/// Largest register held as a dense amplitude vector.
pub const MAX_STATE_QUBITS: usize = 24;

const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Wrap an amplitude vector of length `2^n_qubits` with unit norm.
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if n_qubits > MAX_STATE_QUBITS {
            return Err(Error::DimensionTooLarge(format!("{n_qubits}-qubit statevector")));
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::invalid(format!(
                "{} amplitudes for {n_qubits} qubits",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(StateVector { n_qubits, amplitudes })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        StateVector::new(n_qubits, amplitudes)
    }

    /// Haar-like random state from complex Gaussian amplitudes.
    pub fn random(rng: &mut impl Rng, n_qubits: usize) -> Self {
        let amps = (0..1usize << n_qubits)
            .map(|_| {
                let g: (f64, f64) = (rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
                Complex::new(g.0, g.1)
            })
            .collect();
        StateVector::normalized(n_qubits, amps).expect("nonzero Gaussian vector")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: n,
            });
        }
        Ok(())
    }

    /// `<self|P|self>`.
    pub fn expectation_string(&self, p: &PauliString) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (b, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let (target, phase) = p.apply_to_basis(b as u64);
            acc += self.amplitudes[target as usize].conj() * phase.to_complex() * amp;
        }
        acc
    }

    /// `<self|h|self>` without the Hermitian projection.
    pub fn expectation_complex(&self, h: &PauliSum) -> Result<C64> {
        self.check(h.n_qubits())?;
        Ok(h.iter().map(|(p, c)| c * self.expectation_string(p)).sum())
    }

    /// Probability of each computational basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Nonzero probabilities keyed by basis index.
    pub fn probability_table(&self) -> BTreeMap<u64, f64> {
        self.probabilities()
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(b, p)| (b as u64, p))
            .collect()
    }

    fn apply_single(&mut self, q: usize, m: [[C64; 2]; 2]) {
        let bit = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 {
                continue;
            }
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn apply_basis_change(&mut self, q: usize, change: BasisChange) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (r, i) = (Complex::new(h, 0.0), Complex::new(0.0, h));
        match change {
            BasisChange::None => {}
            BasisChange::Hadamard => self.apply_single(q, [[r, r], [r, -r]]),
            // H · diag(1, -i)
            BasisChange::PhaseHadamard => self.apply_single(q, [[r, -i], [r, i]]),
        }
    }

    /// Copy with the group's rotation circuit applied.
    pub fn rotated(&self, group: &QwcGroup) -> StateVector {
        let mut s = self.clone();
        for (q, c) in rotation_circuit(group).into_iter().enumerate() {
            s.apply_basis_change(q, c);
        }
        s
    }
}

/// `h|v>` for an unnormalized amplitude vector.
pub fn apply_sum(h: &PauliSum, v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (p, c) in h.iter() {
        for (b, amp) in v.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let (target, phase) = p.apply_to_basis(b as u64);
            out[target as usize] += c * phase.to_complex() * amp;
        }
    }
    out
}

/// `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// One-hot state on `n_qubits`, with bit `k` of `bits` giving qubit `k`.
pub fn prepare_basis_state(n_qubits: usize, bits: u64) -> Result<StateVector> {
    if n_qubits > MAX_STATE_QUBITS {
        return Err(Error::DimensionTooLarge(format!("{n_qubits}-qubit statevector")));
    }
    if n_qubits < 64 && bits >> n_qubits != 0 {
        return Err(Error::invalid(format!("bits {bits:#b} exceed {n_qubits} qubits")));
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
    amps[bits as usize] = C64::new(1.0, 0.0);
    StateVector::new(n_qubits, amps)
}

/// `<s|h|s>`, real part. Hermitian inputs have a vanishing imaginary part.
pub fn exact_expectation(h: &PauliSum, s: &StateVector) -> Result<f64> {
    Ok(s.expectation_complex(h)?.re)
}

/// Text form of the low `n_bits` of `bits`, bit 0 first.
pub fn format_bits(bits: u64, n_bits: usize) -> String {
    (0..n_bits).map(|k| if bits >> k & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bits(text: &str) -> Result<(u64, usize)> {
    let text = text.trim();
    if text.is_empty() || text.len() > 64 {
        return Err(Error::invalid(format!("bitstring {text:?} must have 1 to 64 characters")));
    }
    let mut bits = 0u64;
    for (k, ch) in text.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => bits |= 1 << k,
            _ => return Err(Error::invalid(format!("bad character {ch:?} in bitstring {text:?}"))),
        }
    }
    Ok((bits, text.len()))
}

/// Shot histogram over `n_bits`-bit outcomes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountTable {
    n_bits: usize,
    counts: BTreeMap<u64, u64>,
    shots: u64,
}

impl CountTable {
    pub fn new(n_bits: usize) -> Self {
        CountTable {
            n_bits,
            counts: BTreeMap::new(),
            shots: 0,
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn get(&self, outcome: u64) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn record(&mut self, outcome: u64, count: u64) -> Result<()> {
        if self.n_bits < 64 && outcome >> self.n_bits != 0 {
            return Err(Error::invalid(format!(
                "outcome {outcome:#b} wider than {} bits",
                self.n_bits
            )));
        }
        if count > 0 {
            *self.counts.entry(outcome).or_default() += count;
            self.shots += count;
        }
        Ok(())
    }

    /// Histogram of the `width` bits starting at `offset`.
    pub fn marginal(&self, offset: usize, width: usize) -> Result<CountTable> {
        if offset + width > self.n_bits {
            return Err(Error::invalid(format!(
                "bits {offset}..{} outside a {}-bit table",
                offset + width,
                self.n_bits
            )));
        }
        let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        let mut out = CountTable::new(width);
        for (&b, &c) in &self.counts {
            out.record((b >> offset) & mask, c)?;
        }
        Ok(out)
    }

    pub fn probabilities(&self) -> BTreeMap<u64, f64> {
        let total = self.shots as f64;
        self.counts.iter().map(|(&b, &c)| (b, c as f64 / total)).collect()
    }

    /// One `bitstring count` line per observed outcome.
    pub fn parse(text: &str) -> Result<CountTable> {
        let mut table: Option<CountTable> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let mut parts = line.split_whitespace();
            let (Some(bits), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err(format!("expected `bitstring count`, got {line:?}")));
            };
            let (outcome, width) = parse_bits(bits).map_err(|e| parse_err(e.to_string()))?;
            let count: u64 = count
                .parse()
                .map_err(|_| parse_err(format!("bad count {count:?}")))?;
            let t = table.get_or_insert_with(|| CountTable::new(width));
            if t.n_bits != width {
                return Err(parse_err(format!("{width}-bit outcome in a {}-bit table", t.n_bits)));
            }
            t.record(outcome, count).map_err(|e| parse_err(e.to_string()))?;
        }
        table.ok_or(Error::EmptyCounts)
    }
}

impl fmt::Display for CountTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (&b, &c) in &self.counts {
            writeln!(f, "{} {c}", format_bits(b, self.n_bits))?;
        }
        Ok(())
    }
}

/// Independent symmetric readout flips with probability `p` on every bit.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NoiseModel {
    p: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::invalid(format!("flip probability {p} outside [0, 0.5)")));
        }
        Ok(NoiseModel { p })
    }

    pub fn noiseless() -> Self {
        NoiseModel { p: 0.0 }
    }

    pub fn flip_probability(&self) -> f64 {
        self.p
    }
}

/// Push a dense distribution over `2^n_bits` outcomes through the per-bit flip channel.
pub fn spam_channel(probabilities: &mut [f64], n_bits: usize, p: f64) {
    if p == 0.0 {
        return;
    }
    for k in 0..n_bits {
        let bit = 1usize << k;
        for i in 0..probabilities.len() {
            if i & bit == 0 {
                let (a, b) = (probabilities[i], probabilities[i | bit]);
                probabilities[i] = (1.0 - p) * a + p * b;
                probabilities[i | bit] = p * a + (1.0 - p) * b;
            }
        }
    }
}

/// Generator for stream `stream` under a master seed; distinct streams are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Multinomial draw by sequential conditional binomials.
fn multinomial(rng: &mut impl Rng, probabilities: &[f64], shots: u64) -> Vec<u64> {
    let mut out = vec![0u64; probabilities.len()];
    let mut remaining = shots;
    let mut mass: f64 = probabilities.iter().sum();
    for (i, &p) in probabilities.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let k = if i + 1 == probabilities.len() || q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out
}

/// Rotated, noise-convolved outcome distribution of one group circuit.
pub fn readout_distribution(state: &StateVector, group: &QwcGroup, noise: &NoiseModel) -> Result<Vec<f64>> {
    state.check(group.n_qubits())?;
    let mut probs = state.rotated(group).probabilities();
    spam_channel(&mut probs, state.n_qubits, noise.p);
    Ok(probs)
}

/// Measure one group at a time: `shots` readouts of `state` in the group's basis.
pub fn serial_sample(
    state: &StateVector,
    group: &QwcGroup,
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CountTable> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be positive"));
    }
    let probs = readout_distribution(state, group, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = CountTable::new(state.n_qubits);
    for (b, c) in multinomial(&mut rng, &probs, shots).into_iter().enumerate() {
        table.record(b as u64, c)?;
    }
    Ok(table)
}

/// Joint readout of a packed batch. `states[i]` is prepared in slot `i`; slots share no
/// entanglement, so each shot concatenates independent per-slot outcomes. Unused
/// register bits start at 0 and see the same flip noise.
pub fn sample_batch(
    states: &[StateVector],
    batch: &PackedBatch,
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CountTable> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be positive"));
    }
    if states.len() != batch.slots.len() {
        return Err(Error::invalid(format!(
            "{} slot states for {} slots",
            states.len(),
            batch.slots.len()
        )));
    }
    let mut samplers = Vec::with_capacity(batch.capacity());
    for (s, slot) in batch.slots.iter().enumerate() {
        let probs = readout_distribution(&states[s], &slot.group, noise)?;
        samplers.push((slot.offset, WeightedIndex::new(&probs).map_err(|e| Error::invalid(e.to_string()))?));
    }
    // Idle slots: |0...0> through the same channel.
    let used = batch.slots.len() * batch.slot_width;
    let idle_bits = batch.register_width - used;
    let idle = if idle_bits > 0 && noise.p > 0.0 {
        let mut probs = vec![0.0; 1 << idle_bits];
        probs[0] = 1.0;
        spam_channel(&mut probs, idle_bits, noise.p);
        Some(WeightedIndex::new(&probs).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist: HashMap<u64, u64> = HashMap::new();
    for _ in 0..shots {
        let mut key = 0u64;
        for (offset, dist) in &samplers {
            key |= (dist.sample(&mut rng) as u64) << offset;
        }
        if let Some(d) = &idle {
            key |= (d.sample(&mut rng) as u64) << used;
        }
        *hist.entry(key).or_default() += 1;
    }
    let mut table = CountTable::new(batch.register_width);
    for (k, c) in hist {
        table.record(k, c)?;
    }
    Ok(table)
}

/// Sample every batch with its own derived stream, in parallel when asked.
pub fn sample_batches(
    state: &StateVector,
    batches: &[PackedBatch],
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
    parallel: bool,
) -> Result<Vec<CountTable>> {
    let run = |(i, b): (usize, &PackedBatch)| {
        let states = vec![state.clone(); b.slots.len()];
        let batch_seed = stream_rng(seed, i as u64).random();
        sample_batch(&states, b, shots, noise, batch_seed)
    };
    if parallel {
        batches.par_iter().enumerate().map(run).collect()
    } else {
        batches.iter().enumerate().map(run).collect()
    }
}
