//! End-to-end runs: configuration, problem construction, per-sector measurement plans,
//! exact or sampled moments, bounds across expansion orders, and report files.
//!
//! Every stage is exposed on its own so that a report value can be recomputed piece by
//! piece with the same configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::chem::{
    build_h_chain, compute_integrals, fcidump_read, hartree_fock, jordan_wigner, reference_determinant,
    second_quantized_hamiltonian, Geometry, IntegralSet, ReferenceDeterminant, ScfOptions, ScfResult, SpinOrbitalHamiltonian,
    SpinSector,
};
use crate::error::{Error, Result, StageExt};
use crate::exact::{exact_spectrum, exact_transitions, singlet_levels, Sector, MAX_DENSE_QUBITS};
use crate::measure::{group_expectations, group_qwc, pack_batches, QwcGroup};
use crate::mitigation::{mitigate, mitigate_distribution, MitigationConfig};
use crate::moments::{moments_for_state, unique_string_count, unique_strings, PowerCache, DEFAULT_TERM_BUDGET};
use crate::pauli::{PauliString, PauliSum};
use crate::pds::{pds_from_moments, transitions_from_levels, PdsOptions, PdsResult, Transitions};
use crate::sim::{prepare_basis_state, readout_distribution, sample_batches, serial_sample, stream_rng, CountTable, NoiseModel, StateVector};
use crate::taper::{taper_operator, taper_state, TaperingData};

/// Hydrogen-chain spacings (Å) used when no Hamiltonian source is configured.
pub const DEFAULT_SPACINGS: [f64; 3] = [2.0, 2.0, 2.0];
/// Group circuits packed into one wide register.
pub const SLOTS_PER_BATCH: usize = 4;
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Statevector moments, no sampling.
    Exact,
    /// One group circuit per execution.
    Serial,
    /// Packed batches of group circuits.
    Parallel,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Serial => "serial",
            Mode::Parallel => "parallel",
        }
    }

    pub fn is_sampled(self) -> bool {
        self != Mode::Exact
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Mode::Exact),
            "serial" => Ok(Mode::Serial),
            "parallel" => Ok(Mode::Parallel),
            other => Err(Error::invalid(format!("unknown mode {other:?} (exact, serial, parallel)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings for a run. Text form: one `key = value` per line, `#` comments.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// XYZ file path, or inline atoms separated by `;`.
    pub geometry: Option<String>,
    pub fcidump: Option<PathBuf>,
    pub basis: String,
    /// Overrides the electron count implied by the source.
    pub electrons: Option<usize>,
    pub k_max: usize,
    /// Shots per circuit execution.
    pub shots: u64,
    pub seed: u64,
    pub spam_p: f64,
    /// Invert the readout channel on sampled counts when `spam_p > 0`.
    pub mitigate: bool,
    pub mode: Mode,
    pub output_dir: PathBuf,
    /// Sampled roots with a smaller quadrature weight are not reported.
    pub weight_floor: f64,
    pub term_budget: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: None,
            fcidump: None,
            basis: "sto-3g".into(),
            electrons: None,
            k_max: 10,
            shots: 100_000,
            seed: 1,
            spam_p: 0.0,
            mitigate: true,
            mode: Mode::Exact,
            output_dir: PathBuf::from("fission-out"),
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            term_budget: DEFAULT_TERM_BUDGET,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::invalid(format!("bad value {value:?} for {key}: expected true or false"))),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 13] = [
        "geometry",
        "fcidump",
        "basis",
        "electrons",
        "k_max",
        "shots",
        "seed",
        "spam_p",
        "mitigate",
        "mode",
        "output_dir",
        "weight_floor",
        "term_budget",
    ];

    /// Assign one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "geometry" => self.geometry = Some(v.to_string()),
            "fcidump" => self.fcidump = Some(PathBuf::from(v)),
            "basis" => self.basis = v.to_string(),
            "electrons" => self.electrons = Some(parse_value(&key, v)?),
            "k_max" => self.k_max = parse_value(&key, v)?,
            "shots" => self.shots = parse_value(&key, v)?,
            "seed" => self.seed = parse_value(&key, v)?,
            "spam_p" => self.spam_p = parse_value(&key, v)?,
            "mitigate" => self.mitigate = parse_bool(&key, v)?,
            "mode" => self.mode = v.parse()?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "weight_floor" => self.weight_floor = parse_value(&key, v)?,
            "term_budget" => self.term_budget = parse_value(&key, v)?,
            _ => return Err(Error::invalid(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Assign every key found in `text` on top of the current values.
    pub fn apply(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    /// Text form accepted by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(g) = &self.geometry {
            let _ = writeln!(out, "geometry = {}", g.replace('\n', "; "));
        }
        if let Some(f) = &self.fcidump {
            let _ = writeln!(out, "fcidump = {}", f.display());
        }
        let _ = writeln!(out, "basis = {}", self.basis);
        if let Some(n) = self.electrons {
            let _ = writeln!(out, "electrons = {n}");
        }
        let _ = writeln!(out, "k_max = {}", self.k_max);
        let _ = writeln!(out, "shots = {}", self.shots);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "spam_p = {}", self.spam_p);
        let _ = writeln!(out, "mitigate = {}", self.mitigate);
        let _ = writeln!(out, "mode = {}", self.mode);
        let _ = writeln!(out, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(out, "weight_floor = {:e}", self.weight_floor);
        let _ = writeln!(out, "term_budget = {}", self.term_budget);
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.geometry.is_some() && self.fcidump.is_some() {
            return Err(Error::invalid("configure either geometry or fcidump, not both"));
        }
        if self.k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        if self.mode.is_sampled() && self.shots == 0 {
            return Err(Error::invalid("shots must be at least 1 when sampling"));
        }
        NoiseModel::new(self.spam_p)?;
        if !(self.weight_floor >= 0.0 && self.weight_floor.is_finite()) {
            return Err(Error::invalid(format!("weight_floor {} must be a non-negative number", self.weight_floor)));
        }
        if self.term_budget == 0 {
            return Err(Error::invalid("term_budget must be positive"));
        }
        Ok(())
    }

    /// Moments needed for orders up to `k_max`.
    pub fn max_power(&self) -> usize {
        2 * self.k_max - 1
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.spam_p)
    }

    /// Readout inversion applied to sampled counts, if any.
    pub fn mitigation(&self) -> Result<Option<MitigationConfig>> {
        if self.mitigate && self.spam_p > 0.0 {
            Ok(Some(MitigationConfig::new(self.spam_p)?))
        } else {
            Ok(None)
        }
    }
}

/// Geometry from a file path or inline `element x y z; ...` text.
pub fn resolve_geometry(source: &str) -> Result<Geometry> {
    let path = Path::new(source.trim());
    if !source.contains(';') && path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return Geometry::parse_xyz(&text);
    }
    Geometry::parse_xyz(&source.replace(';', "\n"))
}

/// Integrals from the configured source, and the geometry when there is one.
pub fn load_integrals(cfg: &RunConfig) -> Result<(IntegralSet, Option<Geometry>)> {
    if let Some(path) = &cfg.fcidump {
        if cfg.geometry.is_some() {
            return Err(Error::invalid("configure either geometry or fcidump, not both"));
        }
        return Ok((fcidump_read(path)?, None));
    }
    let geometry = match &cfg.geometry {
        Some(source) => resolve_geometry(source)?,
        None => build_h_chain(&DEFAULT_SPACINGS)?,
    };
    let ints = compute_integrals(&geometry, &cfg.basis)?;
    Ok((ints, Some(geometry)))
}

/// Qubit Hamiltonian and everything it was derived from.
#[derive(Clone, Debug)]
pub struct Problem {
    pub geometry: Option<Geometry>,
    pub integrals: IntegralSet,
    /// Absent when the integrals were already in an orbital basis.
    pub scf: Option<ScfResult>,
    pub spin_orbital: SpinOrbitalHamiltonian,
    pub hamiltonian: PauliSum,
    pub n_electrons: usize,
}

impl Problem {
    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }

    /// Energy of the closed-shell reference determinant.
    pub fn reference_energy(&self) -> Result<f64> {
        let det = reference_determinant(SpinSector::Singlet, self.n_electrons, self.n_qubits())?;
        Ok(self.spin_orbital.determinant_energy(&det.occupied))
    }
}

pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let (integrals, geometry) = load_integrals(cfg).stage("integrals")?;
    let n_electrons = match (cfg.electrons, &geometry) {
        (Some(n), _) => n,
        (None, Some(g)) => g.n_electrons(),
        (None, None) => integrals.n_electrons,
    };
    let n = integrals.n_orbitals;
    let (scf, coefficients) = if geometry.is_some() {
        let scf = hartree_fock(&integrals, n_electrons, &ScfOptions::default()).stage("scf")?;
        let c = scf.coefficients.clone();
        (Some(scf), c)
    } else {
        (None, DMatrix::identity(n, n))
    };
    let mut spin_orbital = second_quantized_hamiltonian(&integrals, &coefficients).stage("hamiltonian")?;
    spin_orbital.n_electrons = n_electrons;
    let hamiltonian = jordan_wigner(&spin_orbital).stage("hamiltonian")?;
    Ok(Problem {
        geometry,
        integrals,
        scf,
        spin_orbital,
        hamiltonian,
        n_electrons,
    })
}

/// Reference determinant of one spin sector and its tapered problem.
#[derive(Clone, Debug)]
pub struct SectorSetup {
    pub sector: SpinSector,
    pub determinant: ReferenceDeterminant,
    pub tapering: TaperingData,
    pub tapered: PauliSum,
    pub tapered_bits: u64,
}

impl SectorSetup {
    pub fn full_state(&self) -> Result<StateVector> {
        prepare_basis_state(self.determinant.n_spin_orbitals, self.determinant.bits())
    }

    pub fn tapered_state(&self) -> Result<StateVector> {
        prepare_basis_state(self.tapered.n_qubits(), self.tapered_bits)
    }
}

pub fn prepare_sector(problem: &Problem, sector: SpinSector) -> Result<SectorSetup> {
    let determinant = reference_determinant(sector, problem.n_electrons, problem.n_qubits()).stage("reference")?;
    let tapering = TaperingData::for_determinant(&problem.hamiltonian, &determinant).stage("taper")?;
    let tapered = taper_operator(&problem.hamiltonian, &tapering).stage("taper")?;
    let tapered_bits = taper_state(&determinant, &tapering).stage("taper")?;
    Ok(SectorSetup {
        sector,
        determinant,
        tapering,
        tapered,
        tapered_bits,
    })
}

/// Circuit counts for one sector, in the order of the measurement-reduction ladder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostRow {
    pub sector: SpinSector,
    pub max_power: usize,
    pub full_terms: usize,
    pub full_unique: usize,
    pub full_groups: usize,
    pub tapered_terms: usize,
    pub tapered_unique: usize,
    pub tapered_groups: usize,
    pub batches: usize,
}

/// Measurement plan for a tapered operator: distinct strings, their groups and batches.
#[derive(Clone, Debug)]
pub struct MeasurementPlan {
    pub strings: BTreeSet<PauliString>,
    pub groups: Vec<QwcGroup>,
    pub n_batches: usize,
}

pub fn measurement_plan(cache: &mut PowerCache, max_power: usize) -> Result<MeasurementPlan> {
    let strings = unique_strings(cache, max_power).stage("moments")?;
    let list: Vec<PauliString> = strings.iter().copied().collect();
    let groups = group_qwc(&list).stage("plan")?;
    let width = cache.hamiltonian().n_qubits();
    let n_batches = if groups.is_empty() {
        0
    } else {
        pack_batches(&groups, width, SLOTS_PER_BATCH * width).stage("plan")?.len()
    };
    Ok(MeasurementPlan {
        strings,
        groups,
        n_batches,
    })
}

fn cost_row(
    cfg: &RunConfig,
    problem: &Problem,
    full_unique: usize,
    full_groups: usize,
    setup: &SectorSetup,
    plan: &MeasurementPlan,
) -> CostRow {
    CostRow {
        sector: setup.sector,
        max_power: cfg.max_power(),
        full_terms: problem.hamiltonian.len(),
        full_unique,
        full_groups,
        tapered_terms: setup.tapered.len(),
        tapered_unique: plan.strings.len(),
        tapered_groups: plan.groups.len(),
        batches: plan.n_batches,
    }
}

/// Distinct strings and QWC groups of the full operator up to the configured power.
pub fn full_operator_plan(cfg: &RunConfig, full_cache: &mut PowerCache) -> Result<(usize, usize)> {
    let strings: Vec<PauliString> = unique_strings(full_cache, cfg.max_power())
        .stage("moments")?
        .into_iter()
        .collect();
    let groups = group_qwc(&strings).stage("plan")?.len();
    Ok((strings.len(), groups))
}

/// Measurement-reduction ladder for both sectors without evaluating any moments.
pub fn measurement_costs(cfg: &RunConfig, problem: &Problem) -> Result<Vec<CostRow>> {
    let mut full_cache = PowerCache::new(&problem.hamiltonian).with_budget(cfg.term_budget);
    let (full_unique, full_groups) = full_operator_plan(cfg, &mut full_cache)?;
    [SpinSector::Singlet, SpinSector::Triplet]
        .into_iter()
        .map(|sector| {
            let setup = prepare_sector(problem, sector)?;
            let mut cache = PowerCache::new(&setup.tapered).with_budget(cfg.term_budget);
            let plan = measurement_plan(&mut cache, cfg.max_power())?;
            Ok(cost_row(cfg, problem, full_unique, full_groups, &setup, &plan))
        })
        .collect()
}

/// Seed for the sampling streams of one sector.
pub fn sector_seed(seed: u64, sector: SpinSector) -> u64 {
    let stream = match sector {
        SpinSector::Singlet => 0,
        SpinSector::Triplet => 1,
    };
    stream_rng(seed, stream).random()
}

/// One circuit execution: which groups it measured at which offsets, and its counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    /// `(group index, bit offset)` per slot.
    pub slots: Vec<(usize, usize)>,
    pub counts: CountTable,
}

/// Sample every group, one per circuit (serial) or packed four to a register (parallel).
pub fn execute_groups(
    state: &StateVector,
    groups: &[QwcGroup],
    mode: Mode,
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<Execution>> {
    match mode {
        Mode::Exact => Err(Error::invalid("exact mode does not sample")),
        Mode::Serial => groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let group_seed = stream_rng(seed, i as u64).random();
                Ok(Execution {
                    slots: vec![(i, 0)],
                    counts: serial_sample(state, g, shots, noise, group_seed)?,
                })
            })
            .collect(),
        Mode::Parallel => {
            let width = state.n_qubits();
            let batches = pack_batches(groups, width, SLOTS_PER_BATCH * width)?;
            let tables = sample_batches(state, &batches, shots, noise, seed, true)?;
            Ok(batches
                .iter()
                .zip(tables)
                .map(|(b, counts)| Execution {
                    slots: b.slots.iter().map(|s| (s.group_index, s.offset)).collect(),
                    counts,
                })
                .collect())
        }
    }
}

/// Per-string expectations from executed circuits, optionally after readout inversion
/// on each slot's marginal counts.
pub fn expectations_from_executions(
    groups: &[QwcGroup],
    executions: &[Execution],
    mitigation: Option<&MitigationConfig>,
) -> Result<BTreeMap<PauliString, f64>> {
    let mut out = BTreeMap::new();
    for ex in executions {
        for &(gi, offset) in &ex.slots {
            let group = groups
                .get(gi)
                .ok_or_else(|| Error::invalid(format!("execution refers to missing group {gi}")))?;
            let marginal = ex.counts.marginal(offset, group.n_qubits())?;
            let probabilities = match mitigation {
                Some(m) => mitigate(&marginal, m)?,
                None => marginal.probabilities(),
            };
            out.extend(group_expectations(group, &probabilities));
        }
    }
    Ok(out)
}

/// Infinite-shot expectations: each group's exact readout distribution through the flip
/// channel, optionally inverted over its nonzero outcomes.
pub fn expectations_from_distributions(
    state: &StateVector,
    groups: &[QwcGroup],
    noise: &NoiseModel,
    mitigation: Option<&MitigationConfig>,
) -> Result<BTreeMap<PauliString, f64>> {
    let mut out = BTreeMap::new();
    for group in groups {
        let dense = readout_distribution(state, group, noise)?;
        let table: BTreeMap<u64, f64> = dense
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(b, &p)| (b as u64, p))
            .collect();
        let probabilities = match mitigation {
            Some(m) => mitigate_distribution(&table, group.n_qubits(), m)?,
            None => table,
        };
        out.extend(group_expectations(group, &probabilities));
    }
    Ok(out)
}

/// Moments `<(H − c)ⁿ>` for `n = 0..=max_power` assembled from per-string estimates.
pub fn moments_from_expectations(
    cache: &mut PowerCache,
    expectations: &BTreeMap<PauliString, f64>,
    max_power: usize,
) -> Result<Vec<f64>> {
    (0..=max_power)
        .map(|n| {
            let power = cache.power(n)?;
            power
                .iter()
                .map(|(p, c)| {
                    if p.is_identity() {
                        Ok(c.re)
                    } else {
                        expectations
                            .get(p)
                            .map(|e| c.re * e)
                            .ok_or_else(|| Error::invalid(format!("no estimate for string {p}")))
                    }
                })
                .sum()
        })
        .collect()
}

/// Roots at one expansion order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderResult {
    pub k: usize,
    pub result: std::result::Result<PdsResult, String>,
    /// Roots reported as energies; in sampled modes those with enough weight.
    pub levels: Vec<f64>,
}

impl OrderResult {
    pub fn level(&self, i: usize) -> Option<f64> {
        self.levels.get(i).copied()
    }
}

/// Bounds at every order `1..=k_max` from one moment sequence.
pub fn scan_orders(values: &[f64], shift: f64, k_max: usize, weight_floor: Option<f64>) -> Vec<OrderResult> {
    let opts = PdsOptions::default();
    (1..=k_max)
        .map(|k| {
            let result = pds_from_moments(&values[..2 * k], shift, k, &opts).map_err(|e| e.to_string());
            let levels = match (&result, weight_floor) {
                (Ok(r), Some(floor)) => r.supported_roots(floor),
                (Ok(r), None) => r.roots.clone(),
                (Err(_), _) => Vec::new(),
            };
            OrderResult { k, result, levels }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SectorRun {
    pub setup: SectorSetup,
    pub cost: CostRow,
    /// Energy the moments are taken about.
    pub shift: f64,
    /// Moment values, power `0..=2K_max−1`.
    pub moments: Vec<f64>,
    /// Cumulative distinct strings of the operator the moments were taken for.
    pub cumulative_unique: Vec<usize>,
    pub orders: Vec<OrderResult>,
}

impl SectorRun {
    pub fn final_order(&self) -> &OrderResult {
        self.orders.last().expect("at least one order")
    }
}

/// Exact sector levels for reference.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ExactReference {
    pub s0: f64,
    pub s1: f64,
    pub t0: f64,
    pub transitions: Transitions,
}

pub fn exact_reference(problem: &Problem) -> Result<ExactReference> {
    let n_e = problem.n_electrons;
    let s = exact_spectrum(&problem.hamiltonian, Some(Sector::new(n_e, 0)))?;
    let t = exact_spectrum(&problem.hamiltonian, Some(Sector::new(n_e, 2)))?;
    let transitions = exact_transitions(&s, &t)?;
    let singlets = singlet_levels(&s, &t);
    Ok(ExactReference {
        s0: singlets[0],
        s1: singlets[1],
        t0: t.eigenvalues[0],
        transitions,
    })
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: RunConfig,
    pub n_qubits: usize,
    pub hamiltonian_terms: usize,
    pub reference_energy: f64,
    /// Cumulative distinct strings of the full operator, powers `0..=2K_max−1`.
    pub full_cumulative_unique: Vec<usize>,
    pub singlet: SectorRun,
    pub triplet: SectorRun,
    pub exact: Option<ExactReference>,
    /// Transitions at the final order; absent when that order failed.
    pub transitions: Option<Transitions>,
    /// Why the final order gave no transitions.
    pub failure: Option<String>,
}

/// Moments of one sector's reference state for orders up to `k_max`: statevector
/// moments of the full operator in exact mode, sampled moments of the tapered operator
/// otherwise.
#[derive(Clone, Debug)]
pub struct SectorMoments {
    pub setup: SectorSetup,
    pub plan: MeasurementPlan,
    pub shift: f64,
    pub values: Vec<f64>,
    /// Cumulative distinct strings of the operator the moments were taken for.
    pub cumulative_unique: Vec<usize>,
}

impl SectorMoments {
    /// Weight floor applied to reported roots, if any.
    pub fn weight_floor(&self, cfg: &RunConfig) -> Option<f64> {
        cfg.mode.is_sampled().then_some(cfg.weight_floor)
    }

    /// `power,cumulative_unique,moment_value` rows.
    pub fn to_csv(&self) -> String {
        moments_csv(&self.cumulative_unique, &self.values)
    }
}

fn moments_csv(cumulative_unique: &[usize], values: &[f64]) -> String {
    let mut out = String::from("power,cumulative_unique,moment_value\n");
    for (n, (count, v)) in cumulative_unique.iter().zip(values).enumerate() {
        let _ = writeln!(out, "{n},{count},{v:.15e}");
    }
    out
}

pub fn sector_moments(
    cfg: &RunConfig,
    problem: &Problem,
    full_cache: &mut PowerCache,
    sector: SpinSector,
) -> Result<SectorMoments> {
    let setup = prepare_sector(problem, sector)?;
    let max_power = cfg.max_power();
    let mut tapered_cache = PowerCache::new(&setup.tapered).with_budget(cfg.term_budget);
    let plan = measurement_plan(&mut tapered_cache, max_power)?;
    let (cache, values) = match cfg.mode {
        Mode::Exact => {
            let state = setup.full_state()?;
            let table = moments_for_state(full_cache, &state, cfg.k_max).stage("moments")?;
            (full_cache, table.values)
        }
        mode => {
            let state = setup.tapered_state()?;
            let executions = execute_groups(
                &state,
                &plan.groups,
                mode,
                cfg.shots,
                &cfg.noise()?,
                sector_seed(cfg.seed, sector),
            )
            .stage("simulate")?;
            let mitigation = cfg.mitigation()?;
            let estimates =
                expectations_from_executions(&plan.groups, &executions, mitigation.as_ref()).stage("estimate")?;
            let values = moments_from_expectations(&mut tapered_cache, &estimates, max_power).stage("moments")?;
            (&mut tapered_cache, values)
        }
    };
    let cumulative_unique = unique_string_count(cache, max_power).stage("moments")?;
    let shift = cache.shift();
    Ok(SectorMoments {
        setup,
        plan,
        shift,
        values,
        cumulative_unique,
    })
}

fn sector_run(
    cfg: &RunConfig,
    problem: &Problem,
    full_cache: &mut PowerCache,
    full_groups: usize,
    sector: SpinSector,
) -> Result<SectorRun> {
    let m = sector_moments(cfg, problem, full_cache, sector)?;
    let full_unique = *unique_string_count(full_cache, cfg.max_power()).stage("moments")?.last().unwrap();
    let cost = cost_row(cfg, problem, full_unique, full_groups, &m.setup, &m.plan);
    let orders = scan_orders(&m.values, m.shift, cfg.k_max, m.weight_floor(cfg));
    Ok(SectorRun {
        setup: m.setup,
        cost,
        shift: m.shift,
        moments: m.values,
        cumulative_unique: m.cumulative_unique,
        orders,
    })
}

/// Full pipeline for both spin sectors.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate().stage("config")?;
    let problem = build_problem(cfg)?;
    if problem.n_electrons < 2 {
        return Err(Error::invalid("singlet and triplet sectors need at least two electrons")).stage("reference");
    }
    let mut full_cache = PowerCache::new(&problem.hamiltonian).with_budget(cfg.term_budget);
    let (_, full_groups) = full_operator_plan(cfg, &mut full_cache)?;
    let full_cumulative_unique = unique_string_count(&mut full_cache, cfg.max_power()).stage("moments")?;

    let singlet = sector_run(cfg, &problem, &mut full_cache, full_groups, SpinSector::Singlet)?;
    let triplet = sector_run(cfg, &problem, &mut full_cache, full_groups, SpinSector::Triplet)?;

    let (transitions, failure) = match final_levels(&singlet, &triplet) {
        Ok((s0, s1, t0)) => (Some(transitions_from_levels(s0, s1, t0)), None),
        Err(msg) => (None, Some(msg)),
    };
    let exact = if problem.n_qubits() <= MAX_DENSE_QUBITS && problem.n_qubits() % 2 == 0 {
        exact_reference(&problem).ok()
    } else {
        None
    };
    Ok(RunReport {
        config: cfg.clone(),
        n_qubits: problem.n_qubits(),
        hamiltonian_terms: problem.hamiltonian.len(),
        reference_energy: problem.reference_energy()?,
        full_cumulative_unique,
        singlet,
        triplet,
        exact,
        transitions,
        failure,
    })
}

/// S0, S1 and T0 at the final order, or why they are unavailable.
fn final_levels(singlet: &SectorRun, triplet: &SectorRun) -> std::result::Result<(f64, f64, f64), String> {
    let s = singlet.final_order();
    let t = triplet.final_order();
    if let Err(e) = &s.result {
        return Err(format!("singlet order {}: {e}", s.k));
    }
    if let Err(e) = &t.result {
        return Err(format!("triplet order {}: {e}", t.k));
    }
    match (s.level(0), s.level(1), t.level(0)) {
        (Some(a), Some(b), Some(c)) => Ok((a, b, c)),
        _ => Err(format!(
            "order {} gives {} singlet and {} triplet levels",
            s.k,
            s.levels.len(),
            t.levels.len()
        )),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10}")).unwrap_or_default()
}

impl RunReport {
    /// Error when the final order produced no usable levels.
    pub fn check(&self) -> Result<()> {
        match &self.failure {
            Some(msg) => Err(Error::InsufficientLevels(msg.clone())).stage("pds"),
            None => Ok(()),
        }
    }

    /// Measurement-reduction ladder per sector.
    pub fn circuit_costs_csv(&self) -> String {
        let mut out = String::from("sector,stage,circuits\n");
        for run in [&self.singlet, &self.triplet] {
            let c = &run.cost;
            for (stage, n) in [
                ("original", c.full_unique),
                ("qwc", c.full_groups),
                ("tapering", c.tapered_unique),
                ("tapering+qwc", c.tapered_groups),
                ("tapering+qwc+parallel", c.batches),
            ] {
                let _ = writeln!(out, "{},{stage},{n}", c.sector);
            }
        }
        out
    }

    /// Distinct strings and levels against the expansion order.
    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("K,unique,S0,S1,T0\n");
        for (s, t) in self.singlet.orders.iter().zip(&self.triplet.orders) {
            let unique = self.full_cumulative_unique[2 * s.k - 1];
            let _ = writeln!(
                out,
                "{},{unique},{},{},{}",
                s.k,
                cell(s.level(0)),
                cell(s.level(1)),
                cell(t.level(0))
            );
        }
        out
    }

    /// Final-order energies for the configured mode, with the exact reference when known.
    pub fn energies_csv(&self) -> String {
        let mut out = String::from("method,K,S0,S1,T0,s0_s1_ev,s0_t0_ev,fission_ratio\n");
        let s = self.singlet.final_order();
        let t = self.triplet.final_order();
        let tr = |f: fn(&Transitions) -> f64| self.transitions.as_ref().map(|t| format!("{:.6}", f(t))).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            self.method_label(),
            self.config.k_max,
            cell(s.level(0)),
            cell(s.level(1)),
            cell(t.level(0)),
            tr(|t| t.s0_s1),
            tr(|t| t.s0_t0),
            tr(|t| t.fission_ratio)
        );
        if let Some(e) = &self.exact {
            let _ = writeln!(
                out,
                "exact_diagonalization,,{:.10},{:.10},{:.10},{:.6},{:.6},{:.6}",
                e.s0, e.s1, e.t0, e.transitions.s0_s1, e.transitions.s0_t0, e.transitions.fission_ratio
            );
        }
        out
    }

    fn method_label(&self) -> String {
        match self.config.mode {
            Mode::Exact => "noiseless".into(),
            m => {
                let mut label = format!("{m}_{}_shots", self.config.shots);
                if self.config.spam_p > 0.0 {
                    let _ = write!(label, "_p{}", self.config.spam_p);
                    if self.config.mitigate {
                        label.push_str("_mitigated");
                    }
                }
                label
            }
        }
    }

    /// `power,cumulative_unique,moment_value` for one sector.
    pub fn moments_csv(&self, sector: SpinSector) -> String {
        let run = match sector {
            SpinSector::Singlet => &self.singlet,
            SpinSector::Triplet => &self.triplet,
        };
        moments_csv(&run.cumulative_unique, &run.moments)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let cfg = &self.config;
        let _ = writeln!(out, "mode: {}", self.method_label());
        let _ = writeln!(out, "qubits: {}, Hamiltonian terms: {}", self.n_qubits, self.hamiltonian_terms);
        let _ = writeln!(out, "reference determinant energy: {:.10} Ha", self.reference_energy);
        let _ = writeln!(out, "moments about: {:.10} Ha", self.singlet.shift);
        for run in [&self.singlet, &self.triplet] {
            let c = &run.cost;
            let _ = writeln!(
                out,
                "{}: reference {:?}, tapered to {} qubits (removed {:?}, signs {:?})",
                c.sector,
                run.setup.determinant.occupied,
                run.setup.tapered.n_qubits(),
                run.setup.tapering.removed_qubits,
                run.setup.tapering.sector_signs
            );
            let _ = writeln!(
                out,
                "  circuits: original {}, qwc {}, tapering {}, tapering+qwc {}, batches {}",
                c.full_unique, c.full_groups, c.tapered_unique, c.tapered_groups, c.batches
            );
            for o in &run.orders {
                match &o.result {
                    Ok(r) => {
                        let shown: Vec<String> = o.levels.iter().take(3).map(|x| format!("{x:.6}")).collect();
                        let _ = writeln!(out, "  K={:>2} order {:>2}: {}", o.k, r.order, shown.join(" "));
                    }
                    Err(e) => {
                        let _ = writeln!(out, "  K={:>2}: failed: {e}", o.k);
                    }
                }
            }
        }
        let s = self.singlet.final_order();
        let t = self.triplet.final_order();
        let _ = writeln!(
            out,
            "K={}: S0 {} S1 {} T0 {} Ha",
            cfg.k_max,
            cell(s.level(0)),
            cell(s.level(1)),
            cell(t.level(0))
        );
        match (&self.transitions, &self.failure) {
            (Some(tr), _) => {
                let _ = writeln!(
                    out,
                    "S0->S1 {:.4} eV, S0->T0 {:.4} eV, fission ratio {:.4}",
                    tr.s0_s1, tr.s0_t0, tr.fission_ratio
                );
            }
            (None, Some(msg)) => {
                let _ = writeln!(out, "no transitions: {msg}");
            }
            (None, None) => {}
        }
        if let Some(e) = &self.exact {
            let _ = writeln!(
                out,
                "exact: S0 {:.10} S1 {:.10} T0 {:.10} Ha; S0->S1 {:.4} eV, S0->T0 {:.4} eV, ratio {:.4}",
                e.s0, e.s1, e.t0, e.transitions.s0_s1, e.transitions.s0_t0, e.transitions.fission_ratio
            );
        }
        out
    }
}

/// Write the report files into `dir`, returning their paths.
pub fn write_reports(report: &RunReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("circuit_costs.csv", report.circuit_costs_csv()),
        ("convergence.csv", report.convergence_csv()),
        ("energies.csv", report.energies_csv()),
        ("moments_singlet.csv", report.moments_csv(SpinSector::Singlet)),
        ("moments_triplet.csv", report.moments_csv(SpinSector::Triplet)),
        ("summary.txt", report.summary()),
        ("config.txt", report.config.to_text()),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let text = "# run\nmode = parallel\nshots = 8192\nseed = 42\nspam_p = 0.001\nk_max = 4\ngeometry = H 0 0 0; H 0 0 0.74\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.mode, Mode::Parallel);
        assert_eq!(cfg.shots, 8192);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(RunConfig::parse("shots 5"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(RunConfig::parse("\ncolour = red"), Err(Error::Parse { line: 2, .. })));
        let both = RunConfig::parse("geometry = H 0 0 0; H 0 0 1\nfcidump = x.fcidump").unwrap();
        assert!(both.validate().unwrap_err().is_validation());
        let mut cfg = RunConfig::default();
        cfg.k_max = 0;
        assert!(cfg.validate().is_err());
        cfg.k_max = 2;
        cfg.spam_p = 0.5;
        assert!(cfg.validate().is_err());
        cfg.spam_p = 0.0;
        cfg.mode = Mode::Serial;
        cfg.shots = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn both_sources_rejected_before_work() {
        let mut cfg = RunConfig::default();
        cfg.geometry = Some("H 0 0 0; H 0 0 0.74".into());
        cfg.fcidump = Some("/nonexistent/file".into());
        let err = run_pipeline(&cfg).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().starts_with("config:"), "{err}");
    }

    #[test]
    fn inline_geometry() {
        let g = resolve_geometry("H 0 0 0; H 0 0 0.74").unwrap();
        assert_eq!(g.atoms.len(), 2);
        assert!(resolve_geometry("H 0 0").is_err());
    }

    #[test]
    fn h2_exact_run_matches_dense_levels() {
        let mut cfg = RunConfig::default();
        cfg.geometry = Some("H 0 0 0; H 0 0 0.74".into());
        cfg.k_max = 2;
        let report = run_pipeline(&cfg).unwrap();
        report.check().unwrap();
        let e = report.exact.unwrap();
        let s = report.singlet.final_order();
        assert!(s.level(0).unwrap() >= e.s0 - 1e-8);
        // The closed-shell reference only couples to the two gerade singlets.
        assert!((s.level(0).unwrap() - e.s0).abs() < 1e-8);
        let t = report.triplet.final_order();
        assert!((t.level(0).unwrap() - e.t0).abs() < 1e-8);
        assert!(report.convergence_csv().starts_with("K,unique,S0,S1,T0\n1,"));
    }

    #[test]
    fn sampled_h2_is_reproducible() {
        let mut cfg = RunConfig::default();
        cfg.geometry = Some("H 0 0 0; H 0 0 0.74".into());
        cfg.k_max = 2;
        cfg.mode = Mode::Parallel;
        cfg.shots = 2000;
        cfg.seed = 9;
        let a = run_pipeline(&cfg).unwrap();
        let b = run_pipeline(&cfg).unwrap();
        assert_eq!(a.singlet.moments, b.singlet.moments);
        assert_eq!(a.energies_csv(), b.energies_csv());
    }

    #[test]
    fn mitigated_distributions_recover_noiseless_expectations() {
        let problem = build_problem(&RunConfig {
            geometry: Some("H 0 0 0; H 0 0 0.74".into()),
            ..RunConfig::default()
        })
        .unwrap();
        let setup = prepare_sector(&problem, SpinSector::Singlet).unwrap();
        let mut cache = PowerCache::new(&setup.tapered);
        let plan = measurement_plan(&mut cache, 3).unwrap();
        let state = setup.tapered_state().unwrap();
        let clean = expectations_from_distributions(&state, &plan.groups, &NoiseModel::noiseless(), None).unwrap();
        let noise = NoiseModel::new(0.01).unwrap();
        let cfg = MitigationConfig::new(0.01).unwrap();
        let fixed = expectations_from_distributions(&state, &plan.groups, &noise, Some(&cfg)).unwrap();
        for (p, v) in &clean {
            assert!((v - state.expectation_string(p).re).abs() < 1e-12);
            assert!((fixed[p] - v).abs() < 1e-10);
        }
    }

    #[test]
    fn moments_from_exact_expectations_match_statevector() {
        let problem = build_problem(&RunConfig {
            geometry: Some("H 0 0 0; H 0 0 0.74".into()),
            ..RunConfig::default()
        })
        .unwrap();
        let setup = prepare_sector(&problem, SpinSector::Singlet).unwrap();
        let mut cache = PowerCache::new(&setup.tapered);
        let state = setup.tapered_state().unwrap();
        let exact: BTreeMap<PauliString, f64> = unique_strings(&mut cache, 5)
            .unwrap()
            .into_iter()
            .map(|p| (p, state.expectation_string(&p).re))
            .collect();
        let from_strings = moments_from_expectations(&mut cache, &exact, 5).unwrap();
        let table = moments_for_state(&mut cache, &state, 3).unwrap();
        for (a, b) in from_strings.iter().zip(&table.values) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}
