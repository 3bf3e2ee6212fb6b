use std::fs;
use std::process::{Command, Output};

const H2: &str = "H 0 0 0; H 0 0 0.74";

fn fission(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fission"))
        .args(args)
        .env_remove("FISSION_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_lists_subcommands() {
    let o = fission(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for cmd in ["integrals", "hamiltonian", "taper", "plan", "moments", "pds", "exact", "simulate", "mitigate", "run"] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
}

#[test]
fn usage_and_validation_errors_exit_one() {
    assert_eq!(fission(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fission(&["--k-max", "0", "plan"]).status.code(), Some(1));
    assert_eq!(fission(&["--spam-p", "0.7", "plan"]).status.code(), Some(1));
    assert_eq!(fission(&["--set", "no_such_key=1", "plan"]).status.code(), Some(1));
    let o = fission(&["--geometry", H2, "--fcidump", "x.fcidump", "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
}

#[test]
fn plan_reports_measurement_ladder() {
    let o = fission(&["plan"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("singlet,4223,441,527,122,31"), "{text}");
    assert!(text.contains("triplet,4223,441,379,66,17"), "{text}");
}

#[test]
fn exact_marks_singlets() {
    let o = fission(&["exact", "--levels", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("-1.8977806604 S"), "{text}");
    assert!(text.contains("-1.8818756951 other"), "{text}");
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out");
    fs::write(&cfg, format!("geometry = {H2}\nk_max = 5\noutput_dir = {}\n", out.display())).unwrap();
    // The flag wins over the file. One moment pair yields a single singlet level, so
    // transitions are unavailable and the run reports a computation failure after
    // writing its files.
    let o = fission(&["--config", cfg.to_str().unwrap(), "--k-max", "1", "run"]);
    assert_eq!(o.status.code(), Some(2));
    let written = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(written.contains("k_max = 1"), "{written}");
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = fission(&["--output-dir", dir.path().to_str().unwrap(), "run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["circuit_costs.csv", "convergence.csv", "energies.csv", "moments_singlet.csv", "moments_triplet.csv", "summary.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let energies = fs::read_to_string(dir.path().join("energies.csv")).unwrap();
    assert!(energies.starts_with("method,K,S0,S1,T0"));
    assert!(stdout(&o).contains("S0->S1 1.1210 eV"));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fission"))
        .args(["--mode", "serial", "--shots", "200", "--k-max", "2", "simulate"])
        .env("FISSION_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("counts_singlet").join("circuit_0000.txt").is_file());
}

#[test]
fn simulate_then_mitigate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = fission(&["-o", d, "--mode", "parallel", "--shots", "500", "--spam-p", "0.01", "--k-max", "2", "simulate", "--sector", "triplet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let counts = dir.path().join("counts_triplet").join("circuit_0000.txt");
    let text = fs::read_to_string(&counts).unwrap();
    let shots: u64 = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(shots, 500);

    let mitigated = dir.path().join("mitigated.txt");
    let o = fission(&["mitigate", "--p", "0.01", counts.to_str().unwrap(), "--output", mitigated.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let total: f64 = fs::read_to_string(&mitigated)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);

    assert_eq!(fission(&["mitigate", "--p", "0.6", counts.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn hamiltonian_and_fcidump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("h2.fcidump");
    let o = fission(&["--geometry", H2, "integrals", "--write-fcidump", dump.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let from_geometry = stdout(&fission(&["--geometry", H2, "exact", "--levels", "1"]));
    let from_dump = stdout(&fission(&["--fcidump", dump.to_str().unwrap(), "exact", "--levels", "1"]));
    let ground = |s: &str| -> f64 { s.lines().nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap() };
    assert!((ground(&from_geometry) - ground(&from_dump)).abs() < 1e-8);

    let ham = dir.path().join("h.txt");
    assert!(fission(&["--geometry", H2, "hamiltonian", "--out", ham.to_str().unwrap()]).status.success());
    assert_eq!(fs::read_to_string(ham).unwrap().lines().count(), 15);
}
