//! Measurement planning: qubit-wise-commuting groups, their basis rotations, packing of
//! several narrow group circuits into one wide register, and recovery of string
//! expectations from joint counts.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliString};
use crate::sim::CountTable;

pub const DEFAULT_SLOT_WIDTH: usize = 5;
pub const DEFAULT_REGISTER_WIDTH: usize = 20;

/// Strings sharing one measurement basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QwcGroup {
    members: Vec<PauliString>,
    rotation: PauliString,
}

impl QwcGroup {
    pub fn new(first: PauliString) -> Self {
        QwcGroup {
            members: vec![first],
            rotation: first,
        }
    }

    /// Build a group from explicit members, checking pairwise compatibility.
    pub fn from_members(members: &[PauliString]) -> Result<Self> {
        let (first, rest) = members
            .split_first()
            .ok_or_else(|| Error::invalid("a group needs at least one member"))?;
        let mut g = QwcGroup::new(*first);
        for p in rest {
            if p.n_qubits() != first.n_qubits() {
                return Err(Error::QubitMismatch {
                    left: first.n_qubits(),
                    right: p.n_qubits(),
                });
            }
            if !g.try_add(*p) {
                return Err(Error::invalid(format!("{p} does not qubit-wise commute with {}", g.rotation)));
            }
        }
        Ok(g)
    }

    pub fn members(&self) -> &[PauliString] {
        &self.members
    }

    /// Per-qubit union of member letters.
    pub fn rotation(&self) -> PauliString {
        self.rotation
    }

    pub fn n_qubits(&self) -> usize {
        self.rotation.n_qubits()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Compatibility with the rotation is equivalent to compatibility with every member.
    pub fn accepts(&self, p: &PauliString) -> bool {
        p.n_qubits() == self.n_qubits() && self.rotation.qwc_unchecked(p)
    }

    fn try_add(&mut self, p: PauliString) -> bool {
        if !self.accepts(&p) {
            return false;
        }
        self.rotation = PauliString::from_masks(
            self.n_qubits(),
            self.rotation.x_mask() | p.x_mask(),
            self.rotation.z_mask() | p.z_mask(),
        )
        .expect("masks stay within the register");
        self.members.push(p);
        true
    }
}

/// Greedy first-fit partition. Strings are visited by descending weight, ties in
/// canonical order; identity strings are skipped since they need no measurement.
pub fn group_qwc(strings: &[PauliString]) -> Result<Vec<QwcGroup>> {
    if let Some(first) = strings.first() {
        if let Some(bad) = strings.iter().find(|p| p.n_qubits() != first.n_qubits()) {
            return Err(Error::QubitMismatch {
                left: first.n_qubits(),
                right: bad.n_qubits(),
            });
        }
    }
    let mut order: Vec<PauliString> = strings.iter().filter(|p| !p.is_identity()).copied().collect();
    order.sort_unstable_by(|a, b| b.weight().cmp(&a.weight()).then(a.cmp(b)));
    order.dedup();

    let mut groups: Vec<QwcGroup> = Vec::new();
    for p in order {
        if !groups.iter_mut().any(|g| g.try_add(p)) {
            groups.push(QwcGroup::new(p));
        }
    }
    Ok(groups)
}

/// Single-qubit change of basis applied before a computational-basis measurement.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BasisChange {
    None,
    /// `H`, maps the X eigenbasis onto Z.
    Hadamard,
    /// `H S†`, maps the Y eigenbasis onto Z.
    PhaseHadamard,
}

/// Basis change per qubit, qubit 0 first.
pub fn rotation_circuit(group: &QwcGroup) -> Vec<BasisChange> {
    group
        .rotation()
        .letters()
        .map(|l| match l {
            Letter::X => BasisChange::Hadamard,
            Letter::Y => BasisChange::PhaseHadamard,
            Letter::I | Letter::Z => BasisChange::None,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub group: QwcGroup,
    /// Position of the group in the list that was packed.
    pub group_index: usize,
    pub offset: usize,
}

/// Several group circuits sharing one wide register on disjoint qubit ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedBatch {
    pub slots: Vec<Slot>,
    pub slot_width: usize,
    pub register_width: usize,
}

impl PackedBatch {
    pub fn capacity(&self) -> usize {
        self.register_width / self.slot_width
    }
}

pub fn pack_batches(groups: &[QwcGroup], slot_width: usize, register_width: usize) -> Result<Vec<PackedBatch>> {
    if slot_width == 0 || register_width < slot_width || register_width > 64 {
        return Err(Error::invalid(format!(
            "cannot pack {slot_width}-qubit slots into a {register_width}-qubit register"
        )));
    }
    if let Some(g) = groups.iter().find(|g| g.n_qubits() != slot_width) {
        return Err(Error::invalid(format!(
            "group on {} qubits does not fit a {slot_width}-qubit slot",
            g.n_qubits()
        )));
    }
    let per_batch = register_width / slot_width;
    Ok(groups
        .chunks(per_batch)
        .enumerate()
        .map(|(b, chunk)| PackedBatch {
            slots: chunk
                .iter()
                .enumerate()
                .map(|(s, g)| Slot {
                    group: g.clone(),
                    group_index: b * per_batch + s,
                    offset: s * slot_width,
                })
                .collect(),
            slot_width,
            register_width,
        })
        .collect())
}

/// Eigenvalue of a string measured after its group rotation: parity over its support.
fn parity_sign(p: &PauliString, outcome: u64) -> f64 {
    if (p.support() & outcome).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Member expectations from a (quasi-)probability table over the group's rotated basis.
pub fn group_expectations(group: &QwcGroup, probabilities: &BTreeMap<u64, f64>) -> BTreeMap<PauliString, f64> {
    group
        .members()
        .iter()
        .map(|p| {
            let e = probabilities.iter().map(|(&b, &w)| parity_sign(p, b) * w).sum();
            (*p, e)
        })
        .collect()
}

/// Expectation of every member string in the batch, each slot read from the marginal of
/// the joint histogram on its own bits.
pub fn expectations_from_counts(counts: &CountTable, batch: &PackedBatch) -> Result<BTreeMap<PauliString, f64>> {
    if counts.shots() == 0 {
        return Err(Error::EmptyCounts);
    }
    if counts.n_bits() != batch.register_width {
        return Err(Error::invalid(format!(
            "{}-bit counts for a {}-bit register",
            counts.n_bits(),
            batch.register_width
        )));
    }
    let mut out = BTreeMap::new();
    for slot in &batch.slots {
        let marginal = counts.marginal(slot.offset, batch.slot_width)?;
        out.extend(group_expectations(&slot.group, &marginal.probabilities()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::StateVector;
    use crate::testutil::random_string;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn simple_groupings() {
        let g = group_qwc(&[ps("XI"), ps("IX"), ps("XX")]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].rotation(), ps("XX"));

        let g = group_qwc(&[ps("XX"), ps("ZZ")]).unwrap();
        assert_eq!(g.len(), 2);

        assert!(group_qwc(&[ps("II")]).unwrap().is_empty());
        assert!(group_qwc(&[ps("X"), ps("XX")]).is_err());
    }

    #[test]
    fn rotation_changes() {
        let g = QwcGroup::new(ps("XZ"));
        assert_eq!(rotation_circuit(&g), vec![BasisChange::Hadamard, BasisChange::None]);
        let g = QwcGroup::new(ps("YY"));
        assert_eq!(rotation_circuit(&g), vec![BasisChange::PhaseHadamard; 2]);
    }

    #[test]
    fn random_partitions_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let strings: Vec<PauliString> = (0..60).map(|_| random_string(&mut rng, 4)).collect();
            let groups = group_qwc(&strings).unwrap();
            let mut distinct = strings.clone();
            distinct.retain(|p| !p.is_identity());
            distinct.sort();
            distinct.dedup();
            assert_eq!(groups.iter().map(QwcGroup::len).sum::<usize>(), distinct.len());
            for g in &groups {
                for a in g.members() {
                    for b in g.members() {
                        assert!(a.qubit_wise_commutes(b).unwrap());
                    }
                    for q in 0..4 {
                        let l = a.letter(q);
                        assert!(l == Letter::I || l == g.rotation().letter(q));
                    }
                }
            }
        }
    }

    #[test]
    fn batch_counts() {
        let groups: Vec<QwcGroup> = (0..122).map(|_| QwcGroup::new(ps("ZIIII"))).collect();
        assert_eq!(pack_batches(&groups, 5, 20).unwrap().len(), 31);
        assert_eq!(pack_batches(&groups[..66], 5, 20).unwrap().len(), 17);
        let b = pack_batches(&groups[..4], 5, 20).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].slots.iter().map(|s| s.offset).collect::<Vec<_>>(), vec![0, 5, 10, 15]);
        let last = pack_batches(&groups[..6], 5, 20).unwrap();
        assert_eq!(last[1].slots.len(), 2);
        assert_eq!(last[1].slots[1].group_index, 5);
        assert!(pack_batches(&[QwcGroup::new(ps("ZZ"))], 5, 20).is_err());
    }

    #[test]
    fn product_histogram_marginals() {
        // Four independent slot distributions; the joint table is their product.
        let dists: [BTreeMap<u64, f64>; 4] = [
            BTreeMap::from([(0b00001, 0.25), (0b00000, 0.75)]),
            BTreeMap::from([(0b10000, 0.5), (0b00011, 0.5)]),
            BTreeMap::from([(0b11111, 1.0)]),
            BTreeMap::from([(0b00100, 0.125), (0b01000, 0.875)]),
        ];
        let mut counts = CountTable::new(20);
        for (a, pa) in &dists[0] {
            for (b, pb) in &dists[1] {
                for (c, pc) in &dists[2] {
                    for (d, pd) in &dists[3] {
                        let key = a | b << 5 | c << 10 | d << 15;
                        counts.record(key, (pa * pb * pc * pd * 1024.0) as u64).unwrap();
                    }
                }
            }
        }
        for (s, d) in dists.iter().enumerate() {
            assert_eq!(&counts.marginal(5 * s, 5).unwrap().probabilities(), d);
        }
    }

    #[test]
    fn single_zero_shot_gives_plus_one_for_z_strings() {
        let group = group_qwc(&[ps("ZZIII"), ps("IZIIZ"), ps("ZIIII")]).unwrap();
        let batches = pack_batches(&group, 5, 20).unwrap();
        let mut counts = CountTable::new(20);
        counts.record(0, 1).unwrap();
        let e = expectations_from_counts(&counts, &batches[0]).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.values().all(|&v| v == 1.0));
        assert!(expectations_from_counts(&CountTable::new(20), &batches[0]).is_err());
    }

    #[test]
    fn rotated_distribution_reproduces_expectations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let strings: Vec<PauliString> = (0..12).map(|_| random_string(&mut rng, 3)).collect();
            let state = StateVector::random(&mut rng, 3);
            for g in group_qwc(&strings).unwrap() {
                let probs = state.rotated(&g).probability_table();
                for (p, e) in group_expectations(&g, &probs) {
                    assert!((e - state.expectation_string(&p).re).abs() < 1e-10);
                }
            }
        }
    }
}
