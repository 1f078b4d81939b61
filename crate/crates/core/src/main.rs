use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use modgb::arith::PrimeClass;
use modgb::driver::io::{parse_ideal, IdealSpec};
use modgb::driver::{check_basis, modular_gbasis, systems, DeterministicCheck, DriverError, RunConfig};
use modgb::verify::{CheckMode, CheckResult};

const EXIT_REJECTED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;

#[derive(Parser)]
#[command(name = "modgb", version, about = "Gröbner bases over Q by the modular method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Certify {
    Integer,
    Modular,
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Cyclic,
    Katsura,
    Alea6,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Probabilistic,
    Integer,
    Modular,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the reduced Gröbner basis (degrevlex) of an ideal file.
    Compute {
        file: PathBuf,
        /// Accept a probabilistic check with this error bound (bases with
        /// more elements than the threshold only).
        #[arg(long, conflicts_with = "certify")]
        epsilon: Option<f64>,
        /// Deterministic check to run (default: integer).
        #[arg(long, value_enum)]
        certify: Option<Certify>,
        /// Size class of the reconstruction primes.
        #[arg(long, default_value_t = 29, value_parser = parse_bits)]
        prime_bits: u32,
        /// Size class of the learning prime.
        #[arg(long, default_value_t = 31, value_parser = parse_bits)]
        learning_bits: u32,
        /// Number of primes computed concurrently.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Bases with at most this many elements are always checked deterministically.
        #[arg(long, default_value_t = 50)]
        threshold: usize,
        /// Print run statistics to stderr.
        #[arg(long)]
        stats: bool,
        /// Write the basis here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Print primitive integer polynomials instead of monic ones.
        #[arg(long)]
        primitive: bool,
        /// Progress messages on stderr (repeat for more).
        #[arg(short, long, action = clap::ArgAction::Count)]
        verbose: u8,
    },
    /// Print a benchmark system in the input format.
    Gen {
        #[arg(value_enum)]
        system: System,
        /// Size parameter (ignored for alea6).
        n: Option<usize>,
    },
    /// Check that a basis file is the Gröbner basis of an ideal file.
    Check {
        basis: PathBuf,
        ideal: PathBuf,
        #[arg(long, value_enum, default_value = "integer")]
        mode: CheckKind,
        /// Error bound for the probabilistic mode.
        #[arg(long, default_value_t = 1e-16)]
        epsilon: f64,
    },
}

fn parse_bits(s: &str) -> Result<u32, String> {
    let bits: u32 = s.parse().map_err(|e| format!("{e}"))?;
    PrimeClass::from_bits(bits)
        .map(|_| bits)
        .ok_or_else(|| "prime size must be 24, 29 or 31".to_string())
}

fn read_ideal(path: &Path) -> Result<IdealSpec, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_INPUT)
    })?;
    parse_ideal(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_INPUT)
    })
}

fn driver_failure(e: DriverError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        DriverError::PrimeSupplyExhausted(_) => ExitCode::from(EXIT_EXHAUSTED),
        _ => ExitCode::from(EXIT_INPUT),
    }
}

fn describe(result: &CheckResult) -> String {
    match result {
        CheckResult::Certified => "certified".to_string(),
        CheckResult::ProbablyCorrect { bound } => format!("probably correct (error bound {bound:.3e})"),
        CheckResult::Rejected(w) => format!("rejected: {w}"),
    }
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Compute {
            file,
            epsilon,
            certify,
            prime_bits,
            learning_bits,
            threads,
            threshold,
            stats,
            output,
            primitive,
            verbose,
        } => {
            let ideal = read_ideal(&file)?;
            let config = RunConfig {
                epsilon: epsilon.unwrap_or(0.0),
                deterministic: match certify {
                    Some(Certify::Modular) => DeterministicCheck::Modular,
                    _ => DeterministicCheck::Integer,
                },
                prime_class: PrimeClass::from_bits(prime_bits).unwrap(),
                learning_class: PrimeClass::from_bits(learning_bits).unwrap(),
                workers: threads,
                small_basis_threshold: threshold,
                verbosity: verbose,
                ..RunConfig::default()
            };
            let result = modular_gbasis(&ideal, &config).map_err(driver_failure)?;
            let text = result.to_text(&ideal.vars, primitive);
            match output {
                Some(path) => fs::write(&path, text).map_err(|e| {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    ExitCode::from(EXIT_INPUT)
                })?,
                None => print!("{text}"),
            }
            if stats {
                eprint!("{}", result.stats.summary());
                eprintln!("{} elements, {}", result.basis.len(), describe(&result.report.result));
            }
            Ok(())
        }
        Command::Gen { system, n } => {
            let need = |name: &str| {
                n.ok_or_else(|| {
                    eprintln!("error: {name} needs a size argument");
                    ExitCode::from(EXIT_INPUT)
                })
            };
            let ideal = match system {
                System::Cyclic => systems::cyclic(need("cyclic")?),
                System::Katsura => systems::katsura(need("katsura")?),
                System::Alea6 => Ok(systems::alea6()),
            }
            .map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INPUT)
            })?;
            print!("{ideal}");
            Ok(())
        }
        Command::Check {
            basis,
            ideal,
            mode,
            epsilon,
        } => {
            let basis_spec = read_ideal(&basis)?;
            let ideal_spec = read_ideal(&ideal)?;
            if basis_spec.vars != ideal_spec.vars {
                eprintln!("error: basis and ideal declare different variables");
                return Err(ExitCode::from(EXIT_INPUT));
            }
            let mode = match mode {
                CheckKind::Probabilistic => {
                    if !(epsilon > 0.0 && epsilon < 1.0) {
                        eprintln!("error: epsilon must lie in (0, 1)");
                        return Err(ExitCode::from(EXIT_INPUT));
                    }
                    CheckMode::Probabilistic { epsilon }
                }
                CheckKind::Integer => CheckMode::DeterministicInteger,
                CheckKind::Modular => CheckMode::DeterministicModular,
            };
            let report = check_basis(&ideal_spec, &basis_spec.generators, mode).map_err(driver_failure)?;
            println!("{}", describe(&report.result));
            if report.passed() {
                Ok(())
            } else {
                Err(ExitCode::from(EXIT_REJECTED))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
