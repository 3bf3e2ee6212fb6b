mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fission_core::chem::SpinSector;
use fission_core::pipeline::RunConfig;
use fission_core::{Error, Result};

/// Environment variable naming the output directory; config files and flags override it.
const OUTPUT_DIR_ENV: &str = "FISSION_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "fission", version, about = "Moment-based excited-state energies on a simulated qubit register")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,

    #[command(subcommand)]
    command: Command,
}

/// Run settings: a config file, then individual flags on top.
#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// Config file with `key = value` lines.
    #[arg(long, short = 'c', global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// XYZ file, or inline atoms such as "H 0 0 0; H 0 0 0.74" (Å).
    #[arg(long, global = true)]
    geometry: Option<String>,
    #[arg(long, global = true, value_name = "FILE")]
    fcidump: Option<PathBuf>,
    #[arg(long, global = true)]
    basis: Option<String>,
    #[arg(long, global = true)]
    electrons: Option<usize>,
    /// Highest expansion order.
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Shots per circuit execution.
    #[arg(long, global = true)]
    shots: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Readout bit-flip probability.
    #[arg(long, global = true)]
    spam_p: Option<f64>,
    /// exact, serial or parallel.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Invert the readout channel on sampled counts (true/false).
    #[arg(long, global = true)]
    mitigate: Option<bool>,
    #[arg(long, short = 'o', global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Any config key, e.g. `--set weight_floor=1e-5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            cfg.apply(&text)?;
        }
        let flags: [(&str, Option<String>); 11] = [
            ("geometry", self.geometry.clone()),
            ("fcidump", self.fcidump.as_ref().map(|p| p.display().to_string())),
            ("basis", self.basis.clone()),
            ("electrons", self.electrons.map(|v| v.to_string())),
            ("k_max", self.k_max.map(|v| v.to_string())),
            ("shots", self.shots.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("spam_p", self.spam_p.map(|v| v.to_string())),
            ("mode", self.mode.clone()),
            ("mitigate", self.mitigate.map(|v| v.to_string())),
            ("output_dir", self.output_dir.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrals and Hartree–Fock summary.
    Integrals {
        /// Write molecular-orbital integrals in FCIDUMP format.
        #[arg(long, value_name = "FILE")]
        write_fcidump: Option<PathBuf>,
    },
    /// Qubit Hamiltonian, one `coefficient * letters` term per line.
    Hamiltonian {
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Symmetry generators, sector signs and term counts before and after tapering.
    Taper,
    /// Circuit counts along the measurement-reduction ladder.
    Plan,
    /// Moments of one sector as CSV (power, cumulative_unique, moment_value).
    Moments {
        #[arg(long, default_value = "singlet", value_parser = parse_sector)]
        sector: SpinSector,
    },
    /// Bounds at the highest order for both sectors, and transitions.
    Pds {
        /// Also write levels for every order as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Exact lowest levels per spin sector.
    Exact {
        #[arg(long, default_value_t = 6)]
        levels: usize,
    },
    /// Sample every measurement circuit of one sector and write count histograms.
    Simulate {
        #[arg(long, default_value = "singlet", value_parser = parse_sector)]
        sector: SpinSector,
    },
    /// Invert the readout channel on a histogram file.
    Mitigate {
        /// Bit-flip probability of the channel.
        #[arg(long)]
        p: f64,
        /// Histogram with `bitstring count` lines.
        input: PathBuf,
        /// Destination for `bitstring probability` lines; stdout when absent.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Full pipeline with report files.
    Run,
}

fn parse_sector(s: &str) -> std::result::Result<SpinSector, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = cli.config.resolve().and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
