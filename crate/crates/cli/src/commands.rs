use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fission_core::chem::{fcidump_write, SpinSector};
use fission_core::error::StageExt;
use fission_core::exact::{exact_spectrum, singlet_levels, Sector};
use fission_core::mitigation::{mitigate, MitigationConfig};
use fission_core::moments::PowerCache;
use fission_core::pipeline::{
    build_problem, execute_groups, measurement_costs, measurement_plan, prepare_sector, run_pipeline, sector_moments,
    sector_seed, write_reports, Mode, RunConfig, SectorRun,
};
use fission_core::sim::{format_bits, CountTable};
use fission_core::{Error, Result};

use crate::Command;

const SECTORS: [SpinSector; 2] = [SpinSector::Singlet, SpinSector::Triplet];

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Integrals { write_fcidump } => integrals(cfg, write_fcidump.as_deref()),
        Command::Hamiltonian { out } => hamiltonian(cfg, out.as_deref()),
        Command::Taper => taper(cfg),
        Command::Plan => plan(cfg),
        Command::Moments { sector } => moments(cfg, *sector),
        Command::Pds { csv } => pds(cfg, csv.as_deref()),
        Command::Exact { levels } => exact(cfg, *levels),
        Command::Simulate { sector } => simulate(cfg, *sector),
        Command::Mitigate { p, input, output } => mitigate_file(*p, input, output.as_deref()),
        Command::Run => run(cfg),
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, body).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(body: &str, dest: Option<&Path>) -> Result<()> {
    match dest {
        Some(path) => {
            write_file(path, body)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn integrals(cfg: &RunConfig, fcidump: Option<&Path>) -> Result<()> {
    let problem = build_problem(cfg)?;
    let ints = &problem.integrals;
    if let Some(g) = &problem.geometry {
        println!("atoms: {}", g.atoms.len());
        println!("nuclear repulsion: {:.10} Ha", g.nuclear_repulsion());
    } else {
        println!("core energy: {:.10} Ha", ints.core_energy);
    }
    println!("orbitals: {}, electrons: {}", ints.n_orbitals, problem.n_electrons);
    if let Some(scf) = &problem.scf {
        println!("SCF energy: {:.10} Ha ({} iterations)", scf.energy, scf.iterations);
        let eps: Vec<String> = scf.orbital_energies.iter().map(|e| format!("{e:.6}")).collect();
        println!("orbital energies: {}", eps.join(" "));
    }
    println!("reference energy: {:.10} Ha", problem.reference_energy()?);
    if let Some(path) = fcidump {
        fcidump_write(&problem.spin_orbital.mo_integrals(), path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn hamiltonian(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let problem = build_problem(cfg)?;
    eprintln!("{} qubits, {} terms", problem.n_qubits(), problem.hamiltonian.len());
    emit(&problem.hamiltonian.to_string(), out)
}

fn taper(cfg: &RunConfig) -> Result<()> {
    let problem = build_problem(cfg)?;
    for sector in SECTORS {
        let setup = prepare_sector(&problem, sector)?;
        let td = &setup.tapering;
        println!("{sector}: reference orbitals {:?}", setup.determinant.occupied);
        for (g, s) in td.generators.iter().zip(&td.sector_signs) {
            println!("  {s:+} {g}");
        }
        println!("  removed qubits {:?}, {} remain", td.removed_qubits, td.n_remaining);
        println!("  terms {} -> {}", problem.hamiltonian.len(), setup.tapered.len());
    }
    Ok(())
}

fn plan(cfg: &RunConfig) -> Result<()> {
    let problem = build_problem(cfg)?;
    let rows = measurement_costs(cfg, &problem)?;
    println!("powers up to {}", cfg.max_power());
    println!("sector,original,qwc,tapering,tapering+qwc,tapering+qwc+parallel");
    for r in rows {
        println!(
            "{},{},{},{},{},{}",
            r.sector, r.full_unique, r.full_groups, r.tapered_unique, r.tapered_groups, r.batches
        );
    }
    Ok(())
}

fn moments(cfg: &RunConfig, sector: SpinSector) -> Result<()> {
    let problem = build_problem(cfg)?;
    let mut cache = PowerCache::new(&problem.hamiltonian).with_budget(cfg.term_budget);
    let m = sector_moments(cfg, &problem, &mut cache, sector)?;
    eprintln!("moments about {:.10} Ha", m.shift);
    print!("{}", m.to_csv());
    Ok(())
}

fn order_table(run: &SectorRun) -> String {
    let mut out = String::new();
    for o in &run.orders {
        let levels: Vec<String> = o.levels.iter().map(|v| format!("{v:.10}")).collect();
        let _ = writeln!(out, "{},{},{}", run.setup.sector, o.k, levels.join(";"));
    }
    out
}

fn pds(cfg: &RunConfig, csv: Option<&Path>) -> Result<()> {
    let report = run_pipeline(cfg)?;
    for run in [&report.singlet, &report.triplet] {
        let last = run.final_order();
        println!("{} K={}", run.setup.sector, last.k);
        match &last.result {
            Ok(r) => {
                println!("  solved order {}", r.order);
                for (i, root) in r.roots.iter().enumerate() {
                    let w = r.weights.get(i).map_or(String::new(), |w| format!(" weight {w:.3e}"));
                    let kept = if last.levels.contains(root) { "" } else { " (unsupported)" };
                    println!("  {root:.10}{w}{kept}");
                }
            }
            Err(e) => println!("  failed: {e}"),
        }
    }
    if let Some(tr) = &report.transitions {
        println!(
            "S0->S1 {:.4} eV, S0->T0 {:.4} eV, fission ratio {:.4}",
            tr.s0_s1, tr.s0_t0, tr.fission_ratio
        );
    }
    if let Some(path) = csv {
        let body = format!(
            "sector,K,levels\n{}{}",
            order_table(&report.singlet),
            order_table(&report.triplet)
        );
        write_file(path, &body)?;
        println!("wrote {}", path.display());
    }
    report.check()
}

fn exact(cfg: &RunConfig, count: usize) -> Result<()> {
    let problem = build_problem(cfg)?;
    let ne = problem.n_electrons;
    let h = &problem.hamiltonian;
    let sz0 = exact_spectrum(h, Some(Sector::new(ne, 0))).stage("exact")?;
    let sz1 = exact_spectrum(h, Some(Sector::new(ne, 2))).stage("exact")?;
    let singlets = singlet_levels(&sz0, &sz1);
    println!("S_z=0 levels (S = singlet, other = higher spin)");
    for e in sz0.eigenvalues.iter().take(count) {
        let tag = if singlets.contains(e) { "S" } else { "other" };
        println!("  {e:.10} {tag}");
    }
    println!("S_z=1 levels");
    for e in sz1.eigenvalues.iter().take(count) {
        println!("  {e:.10}");
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, sector: SpinSector) -> Result<()> {
    let mode = match cfg.mode {
        Mode::Exact => Mode::Serial,
        m => m,
    };
    let problem = build_problem(cfg)?;
    let setup = prepare_sector(&problem, sector)?;
    let mut cache = PowerCache::new(&setup.tapered).with_budget(cfg.term_budget);
    let plan = measurement_plan(&mut cache, cfg.max_power())?;
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
    let dir = cfg.output_dir.join(format!("counts_{sector}"));
    for (i, ex) in executions.iter().enumerate() {
        let mut body = String::new();
        for &(g, offset) in &ex.slots {
            let _ = writeln!(body, "# slot offset {offset}: group {g} rotation {}", plan.groups[g].rotation());
        }
        body.push_str(&ex.counts.to_string());
        write_file(&dir.join(format!("circuit_{i:04}.txt")), &body)?;
    }
    println!(
        "{sector}: {} {} circuits of {} shots ({} groups) in {}",
        executions.len(),
        mode,
        cfg.shots,
        plan.groups.len(),
        dir.display()
    );
    Ok(())
}

fn mitigate_file(p: f64, input: &Path, output: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(input).map_err(|e| Error::Io {
        path: input.to_path_buf(),
        source: e,
    })?;
    let counts = CountTable::parse(&text)?;
    let probs = mitigate(&counts, &MitigationConfig::new(p)?)?;
    let mut body = String::new();
    for (b, v) in probs {
        let _ = writeln!(body, "{} {v:.12}", format_bits(b, counts.n_bits()));
    }
    emit(&body, output)
}

fn run(cfg: &RunConfig) -> Result<()> {
    let report = run_pipeline(cfg)?;
    let written = write_reports(&report, &cfg.output_dir)?;
    print!("{}", report.summary());
    println!("wrote {} files to {}", written.len(), cfg.output_dir.display());
    report.check()
}
